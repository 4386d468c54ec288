"""Simulation certificates and their JSON form."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..hermitian import operator_from_json, operator_to_json
from ..povm import JointMeasurement


class Kind(str, enum.Enum):
    JOINT = "joint"
    K_OUTCOME = "k-outcome"
    FIXED_ASSIGNMENT = "fixed-assignment"
    PROJECTIVE = "projective"


def _ops_to_json(arr: np.ndarray) -> list:
    d = arr.shape[-1]
    return [operator_to_json(e) for e in np.asarray(arr).reshape(-1, d, d)]


def _ops_from_json(items: list, shape: tuple) -> np.ndarray:
    flat = np.array([operator_from_json(e).matrix for e in items])
    d = flat.shape[-1]
    return flat.reshape(*shape, d, d)


def _num(x: float) -> float:
    return float(f"{float(x):.12g}")


@dataclass
class JointCertificate:
    """Joint measurement whose marginals are the depolarised targets."""

    visibility: float
    joint: JointMeasurement
    kind: Kind = field(default=Kind.JOINT, init=False)
    reconstruction_error: float | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "visibility": _num(self.visibility),
            "outcome_shape": list(self.joint.outcome_shape),
            "effects": _ops_to_json(self.joint.array),
            "reconstruction_error": self.reconstruction_error,
        }


@dataclass
class KOutcomeComponent:
    support: tuple[int, ...]
    weight: float
    effects: np.ndarray  # (len(support), d, d), sums to I


@dataclass
class KOutcomeCertificate:
    """Convex decomposition into POVMs with at most ``k`` non-null outcomes."""

    visibility: float
    n: int
    k: int
    components: list[KOutcomeComponent]
    kind: Kind = field(default=Kind.K_OUTCOME, init=False)
    reconstruction_error: float | None = None

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def embedded(self, comp: KOutcomeComponent) -> np.ndarray:
        """The component as an ``n``-outcome POVM (zeros off its support)."""
        d = comp.effects.shape[-1]
        out = np.zeros((self.n, d, d), dtype=complex)
        out[list(comp.support)] = comp.effects
        return out

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "visibility": _num(self.visibility),
            "n": self.n,
            "k": self.k,
            "weights": [_num(c.weight) for c in self.components],
            "components": [
                {"support": list(c.support), "weight": _num(c.weight), "effects": _ops_to_json(c.effects)}
                for c in self.components
            ],
            "reconstruction_error": self.reconstruction_error,
        }


@dataclass
class SimulatorBlock:
    targets: tuple[int, ...]  # target indices, in axis order of ``joint``
    joint: np.ndarray         # (n_l for l in targets..., d, d)


@dataclass
class FixedAssignmentCertificate:
    """Per-simulator joint measurements plus fixed pre-processing weights ``p(j | l)``."""

    visibility: float
    weights: np.ndarray  # (m targets, J simulators)
    simulators: list[SimulatorBlock | None]
    kind: Kind = field(default=Kind.FIXED_ASSIGNMENT, init=False)
    reconstruction_error: float | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "visibility": _num(self.visibility),
            "weights": [[_num(x) for x in row] for row in self.weights],
            "simulators": [
                None if s is None else {
                    "targets": list(s.targets),
                    "outcome_shape": list(s.joint.shape[:-2]),
                    "effects": _ops_to_json(s.joint),
                }
                for s in self.simulators
            ],
            "reconstruction_error": self.reconstruction_error,
        }


@dataclass
class ProjectiveCertificate:
    """Mixture of projective qubit measurements plus one trivial measurement, all on ``n`` outcomes."""

    visibility: float
    weights: np.ndarray          # projective component weights
    projective: np.ndarray       # (c, n, d, d)
    trivial_weight: float
    trivial: np.ndarray          # (n, d, d), effects proportional to I
    kind: Kind = field(default=Kind.PROJECTIVE, init=False)
    reconstruction_error: float | None = None

    @property
    def n(self) -> int:
        return self.trivial.shape[0]

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "visibility": _num(self.visibility),
            "weights": [_num(w) for w in self.weights],
            "components": [_ops_to_json(p) for p in self.projective],
            "trivial_weight": _num(self.trivial_weight),
            "trivial": _ops_to_json(self.trivial),
            "reconstruction_error": self.reconstruction_error,
        }


SimulationCertificate = JointCertificate | KOutcomeCertificate | FixedAssignmentCertificate | ProjectiveCertificate


def certificate_from_json(obj: dict[str, Any]) -> SimulationCertificate:
    kind = Kind(obj["kind"])
    t = float(obj["visibility"])
    err = obj.get("reconstruction_error")
    if kind is Kind.JOINT:
        shape = tuple(obj["outcome_shape"])
        return JointCertificate(t, JointMeasurement(_ops_from_json(obj["effects"], shape), validate=False), err)
    if kind is Kind.K_OUTCOME:
        comps = [
            KOutcomeComponent(tuple(c["support"]), float(c["weight"]),
                              _ops_from_json(c["effects"], (len(c["support"]),)))
            for c in obj["components"]
        ]
        return KOutcomeCertificate(t, int(obj["n"]), int(obj["k"]), comps, err)
    if kind is Kind.FIXED_ASSIGNMENT:
        sims = []
        for s in obj["simulators"]:
            if s is None:
                sims.append(None)
                continue
            sims.append(SimulatorBlock(tuple(s["targets"]), _ops_from_json(s["effects"], tuple(s["outcome_shape"]))))
        return FixedAssignmentCertificate(t, np.array(obj["weights"], dtype=float), sims, err)
    n = len(obj["trivial"])
    proj = np.array([_ops_from_json(c, (n,)) for c in obj["components"]]) if obj["components"] else np.zeros((0, n, 2, 2))
    return ProjectiveCertificate(t, np.array(obj["weights"], dtype=float), proj, float(obj["trivial_weight"]),
                                 _ops_from_json(obj["trivial"], (n,)), err)
