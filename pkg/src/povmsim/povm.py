"""Measurements, classical processing, depolarisation and named measurement families."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hermitian import (
    DensityMatrix,
    DimensionError,
    HermitianOperator,
    antipodal,
    from_bloch,
    min_eigenvalue,
    operator_from_json,
    operator_to_json,
    to_bloch,
)

POVM_TOL = 1e-9

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
    dtype=complex,
)

TETRA_VERTICES = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(3)


class NotPositiveError(ValueError):
    """An operator that must be PSD has a negative eigenvalue."""

    def __init__(self, index, min_eig: float, what: str = "effect"):
        self.index = index
        self.min_eigenvalue = min_eig
        super().__init__(f"{what} {index} is not positive semidefinite (min eigenvalue {min_eig:.3g})")


def _stack(effects) -> np.ndarray:
    return np.array([e.matrix if isinstance(e, HermitianOperator) else np.asarray(e, dtype=complex) for e in effects])


def _check_effects(arr: np.ndarray, tol: float, label=lambda i: i):
    for i, e in enumerate(arr.reshape(-1, *arr.shape[-2:])):
        lo = float(np.linalg.eigvalsh(e)[0])
        if lo < -tol:
            raise NotPositiveError(label(i), lo)
    d = arr.shape[-1]
    dev = float(np.max(np.abs(arr.reshape(-1, d, d).sum(axis=0) - np.eye(d))))
    if dev > tol:
        raise ValueError(f"effects do not sum to the identity (max deviation {dev:.3g})")


class Povm:
    """Ordered tuple of PSD effects summing to the identity.

    Zero effects are allowed and are never dropped.
    """

    __slots__ = ("_arr", "_effects")

    def __init__(self, effects: Iterable, *, tol: float = POVM_TOL):
        effects = list(effects)
        if not effects:
            raise ValueError("a POVM needs at least one effect")
        ops = tuple(e if isinstance(e, HermitianOperator) else HermitianOperator(e, tol=max(tol, 1e-12)) for e in effects)
        dims = {e.dim for e in ops}
        if len(dims) != 1:
            raise DimensionError(f"effects have mixed dimensions {sorted(dims)}")
        arr = _stack(ops)
        _check_effects(arr, tol)
        arr.setflags(write=False)
        self._arr = arr
        self._effects = ops

    @property
    def effects(self) -> tuple[HermitianOperator, ...]:
        return self._effects

    @property
    def array(self) -> np.ndarray:
        """Effects stacked into shape ``(n, d, d)``."""
        return self._arr

    @property
    def n(self) -> int:
        return len(self._effects)

    @property
    def dim(self) -> int:
        return self._arr.shape[-1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i) -> HermitianOperator:
        return self._effects[i]

    def __iter__(self):
        return iter(self._effects)

    def allclose(self, other: Povm, atol: float = 1e-10) -> bool:
        return self._arr.shape == other.array.shape and bool(np.allclose(self._arr, other.array, rtol=0, atol=atol))

    def is_projective(self, tol: float = 1e-9) -> bool:
        return all(np.allclose(e @ e, e, atol=tol) for e in self._arr)

    def is_trivial(self, tol: float = 1e-9) -> bool:
        d = self.dim
        return all(np.allclose(e, np.trace(e).real / d * np.eye(d), atol=tol) for e in self._arr)

    def __repr__(self) -> str:
        return f"Povm(n={self.n}, dim={self.dim})"

    def to_json(self) -> dict:
        return {"dim": self.dim, "effects": [operator_to_json(e) for e in self._arr]}

    @classmethod
    def from_json(cls, obj: dict) -> Povm:
        effects = [operator_from_json(e) for e in obj["effects"]]
        if "dim" in obj and any(e.dim != int(obj["dim"]) for e in effects):
            raise DimensionError("effect dimension disagrees with declared dim")
        return cls(effects)


@dataclass(frozen=True)
class PostProcessingMap:
    """Column-stochastic matrix, ``matrix[i, i'] = q(i | i')``."""

    matrix: np.ndarray

    def __post_init__(self):
        q = np.array(self.matrix, dtype=float)
        if q.ndim != 2:
            raise ValueError("post-processing matrix must be 2-D")
        if np.any(q < -POVM_TOL):
            raise ValueError("post-processing has negative entries")
        if not np.allclose(q.sum(axis=0), 1, rtol=0, atol=POVM_TOL):
            raise ValueError("post-processing columns must sum to 1")
        q.setflags(write=False)
        object.__setattr__(self, "matrix", q)

    @property
    def n_out(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_in(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, n: int) -> PostProcessingMap:
        return cls(np.eye(n))

    @classmethod
    def deterministic(cls, mapping: Sequence[int], n_out: int) -> PostProcessingMap:
        """Relabel input outcome ``i'`` as ``mapping[i']``."""
        q = np.zeros((n_out, len(mapping)))
        q[list(mapping), np.arange(len(mapping))] = 1.0
        return cls(q)

    @classmethod
    def constant(cls, probs: Sequence[float], n_in: int) -> PostProcessingMap:
        """Ignore the input and output ``i`` with probability ``probs[i]``."""
        return cls(np.repeat(np.asarray(probs, dtype=float)[:, None], n_in, axis=1))


@dataclass(frozen=True)
class PreProcessing:
    """Probability distribution over simulator indices."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if np.any(w < -POVM_TOL) or abs(w.sum() - 1) > POVM_TOL:
            raise ValueError(f"invalid pre-processing weights {w}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)


class JointMeasurement:
    """Effects indexed by outcome tuples ``(a_1, ..., a_m)``.

    Stored as an array of shape ``(n_1, ..., n_m, d, d)``.  Target indices are
    0-based.
    """

    __slots__ = ("_arr",)

    def __init__(self, effects: np.ndarray, *, tol: float = POVM_TOL, validate: bool = True):
        arr = np.array(effects, dtype=complex)
        if arr.ndim < 3 or arr.shape[-1] != arr.shape[-2]:
            raise DimensionError(f"joint effects must have shape (n_1,...,n_m,d,d), got {arr.shape}")
        arr = (arr + np.swapaxes(arr, -1, -2).conj()) / 2
        if validate:
            shape = arr.shape[:-2]
            _check_effects(arr, tol, label=lambda i: np.unravel_index(i, shape))
        arr.setflags(write=False)
        self._arr = arr

    @property
    def array(self) -> np.ndarray:
        return self._arr

    @property
    def outcome_shape(self) -> tuple[int, ...]:
        return self._arr.shape[:-2]

    @property
    def m(self) -> int:
        return len(self.outcome_shape)

    @property
    def dim(self) -> int:
        return self._arr.shape[-1]

    def __getitem__(self, idx) -> HermitianOperator:
        return HermitianOperator(self._arr[tuple(idx)])

    def marginal(self, target: int) -> Povm:
        return marginal(self, target)

    def as_povm(self) -> Povm:
        """Flatten the outcome tuples (row-major) into a single POVM."""
        return Povm(self._arr.reshape(-1, self.dim, self.dim))

    def to_json(self) -> dict:
        flat = self._arr.reshape(-1, self.dim, self.dim)
        return {
            "dim": self.dim,
            "outcome_shape": list(self.outcome_shape),
            "effects": [operator_to_json(e) for e in flat],
        }

    @classmethod
    def from_json(cls, obj: dict) -> JointMeasurement:
        shape = tuple(int(s) for s in obj["outcome_shape"])
        d = int(obj["dim"])
        flat = np.array([operator_from_json(e).matrix for e in obj["effects"]])
        return cls(flat.reshape(*shape, d, d))


@dataclass(frozen=True)
class DepolarisedPovm:
    base: Povm
    visibility: float

    def __post_init__(self):
        if not 0 <= self.visibility <= 1:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")

    def materialize(self) -> Povm:
        return depolarize(self.base, self.visibility)


def depolarize_array(arr: np.ndarray, t: float) -> np.ndarray:
    """Apply ``A -> t A + (1-t) Tr(A) I/d`` to the trailing ``(d, d)`` axes."""
    d = arr.shape[-1]
    tr = np.trace(arr, axis1=-2, axis2=-1).real
    return t * arr + (1 - t) * tr[..., None, None] * np.eye(d) / d


def depolarize(p: Povm, t: float) -> Povm:
    if not 0 <= t <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {t}")
    return Povm(depolarize_array(p.array, t))


def post_process(p: Povm, q: PostProcessingMap) -> Povm:
    if q.n_in != p.n:
        raise DimensionError(f"post-processing expects {q.n_in} outcomes, POVM has {p.n}")
    return Povm(np.tensordot(q.matrix, p.array, axes=1))


def mix(povms: Sequence[Povm], p: PreProcessing | Sequence[float]) -> Povm:
    if not isinstance(p, PreProcessing):
        p = PreProcessing(p)
    if len(povms) != len(p):
        raise DimensionError(f"{len(povms)} POVMs but {len(p)} weights")
    shapes = {q.array.shape for q in povms}
    if len(shapes) != 1:
        raise DimensionError(f"POVMs to mix have different shapes {shapes}")
    return Povm(np.tensordot(p.weights, np.array([q.array for q in povms]), axes=1))


def marginal(mm: JointMeasurement, target: int) -> Povm:
    if not 0 <= target < mm.m:
        raise IndexError(f"target {target} out of range for a {mm.m}-fold joint measurement")
    axes = tuple(i for i in range(mm.m) if i != target)
    return Povm(mm.array.sum(axis=axes))


def joint_from_single(b: Povm, qs: Sequence[PostProcessingMap]) -> JointMeasurement:
    """``M_{a_1..a_m} = sum_i prod_l q_l(a_l | i) B_i``."""
    for q in qs:
        if q.n_in != b.n:
            raise DimensionError(f"post-processing expects {q.n_in} outcomes, POVM has {b.n}")
    shape = tuple(q.n_out for q in qs)
    table = np.ones(shape + (b.n,))
    for l, q in enumerate(qs):
        idx = [None] * len(qs) + [slice(None)]
        idx[l] = slice(None)
        table = table * q.matrix[tuple(idx)]
    return JointMeasurement(np.tensordot(table, b.array, axes=1))


def born(p: Povm, rho: DensityMatrix) -> np.ndarray:
    if rho.dim != p.dim:
        raise DimensionError(f"state has dim {rho.dim}, POVM has dim {p.dim}")
    return np.einsum("aij,ji->a", p.array, rho.matrix).real


def antipodal_povm(p: Povm) -> Povm:
    """Effectwise antipodal; raises :class:`NotPositiveError` if an effect fails PSD."""
    flipped = [antipodal(e) for e in p.effects]
    for i, e in enumerate(flipped):
        lo = min_eigenvalue(e)
        if lo < -POVM_TOL:
            raise NotPositiveError(i, lo, what="antipodal effect")
    return Povm(flipped)


def is_unbiased_dichotomic(p: Povm, tol: float = 1e-9) -> bool:
    return p.n == 2 and all(abs(to_bloch(e).identity_coeff - 0.5) <= tol for e in p.effects)


def random_povm(rng: np.random.Generator, n: int, d: int = 2) -> Povm:
    """Random POVM: Wishart-distributed positive operators normalised by ``S^{-1/2}``."""
    g = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
    w = g @ np.swapaxes(g, -1, -2).conj()
    vals, vecs = np.linalg.eigh(w.sum(axis=0))
    inv_sqrt = vecs @ np.diag(vals**-0.5) @ vecs.conj().T
    return Povm(inv_sqrt @ w @ inv_sqrt, tol=1e-8)


# ---------------------------------------------------------------------------
# Named families

def _unit(v, what="direction") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{what} must have three components")
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise ValueError(f"{what} {v.tolist()} is not a unit vector")
    return v


def qubit_effect(a: float, v) -> HermitianOperator:
    return from_bloch(a, v, 2)


def direction(v) -> Povm:
    v = _unit(v)
    return Povm([qubit_effect(0.5, v / 2), qubit_effect(0.5, -v / 2)])


def tetra() -> Povm:
    return Povm([qubit_effect(0.25, v / 4) for v in TETRA_VERTICES])


def trine_vectors(axis) -> np.ndarray:
    r = _unit(axis, "trine axis")
    ref = np.array([1.0, 0, 0])
    if np.linalg.norm(np.cross(r, ref)) < 1e-9:
        ref = np.array([0, 1.0, 0])
    u1 = ref - ref.dot(r) * r
    u1 /= np.linalg.norm(u1)
    w = np.cross(r, u1)
    angles = 2 * np.pi * np.arange(3) / 3
    return np.array([np.cos(a) * u1 + np.sin(a) * w for a in angles])


def trine(axis=(0, 0, 1)) -> Povm:
    return Povm([qubit_effect(1 / 3, u / 3) for u in trine_vectors(axis)])


def trivial(probs: Sequence[float], d: int = 2) -> Povm:
    return Povm([p * np.eye(d) for p in probs])


def xyz_sigma_set() -> list[Povm]:
    """``[A^(x), A^(y), A^(z), A^(Sigma)]`` with Sigma along ``(1,1,1)/sqrt 3``."""
    return [
        direction([1, 0, 0]),
        direction([0, 1, 0]),
        direction([0, 0, 1]),
        direction(np.ones(3) / np.sqrt(3)),
    ]


def named(name: str, **params) -> Povm | list[Povm]:
    """Construct a measurement (or, for set names, a list of measurements) by name."""
    key = name.lower().replace("_", "-")
    if key in ("pauli-x", "pauli-y", "pauli-z"):
        return direction(np.eye(3)[" xyz".index(key[-1]) - 1])
    if key == "direction":
        return direction(params["v"])
    if key == "sigma":
        return direction(np.ones(3) / np.sqrt(3))
    if key == "tetra":
        return tetra()
    if key == "trine":
        return trine(params.get("axis", (0, 0, 1)))
    if key == "trivial":
        return trivial(params["p"], params.get("d", 2))
    if key in ("xyz-sigma", "paper-set-a", "set-a"):
        return xyz_sigma_set()
    raise KeyError(f"unknown measurement name {name!r}")


def parse_spec(spec: str) -> Povm | list[Povm]:
    """Parse CLI specs such as ``tetra``, ``direction:0,0,1``, ``trine:1,0,0`` or ``trivial:0.3,0.7``.

    ``a+b+c`` builds a list from several single specs.
    """
    if "+" in spec:
        out = []
        for part in spec.split("+"):
            item = parse_spec(part)
            out.extend(item if isinstance(item, list) else [item])
        return out
    name, _, arg = spec.partition(":")
    nums = [float(x) for x in arg.split(",")] if arg else None
    key = name.lower()
    if key == "direction":
        if nums is None:
            raise ValueError("direction needs components, e.g. direction:0,0,1")
        v = np.asarray(nums)
        return named("direction", v=v / np.linalg.norm(v))
    if key == "trine":
        if nums is None:
            return named("trine")
        v = np.asarray(nums)
        return named("trine", axis=v / np.linalg.norm(v))
    if key == "trivial":
        if nums is None:
            raise ValueError("trivial needs probabilities, e.g. trivial:0.5,0.5")
        return named("trivial", p=nums)
    return named(name)
