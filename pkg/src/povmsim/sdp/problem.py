"""Declarative SDP problems: PSD blocks, bounded scalars, affine equalities."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..hermitian import embed_real, orthonormal_basis


class MalformedProblem(ValueError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_LIMIT = "NumericalLimit"


@dataclass
class Settings:
    eps_feas: float = 1e-8
    eps_gap: float = 1e-7
    max_iter: int = 200
    step_fraction: float = 0.98
    margin_cap: float = 10.0
    max_dimension: int = 5000
    verbose: bool = False


@dataclass
class Block:
    name: str
    size: int
    hermitian: bool

    @property
    def real_size(self) -> int:
        return 2 * self.size if self.hermitian else self.size


@dataclass
class Scalar:
    name: str
    lower: float | None = None
    upper: float | None = None


@dataclass
class Constraint:
    blocks: dict[str, np.ndarray]
    scalars: dict[str, float]
    rhs: float


class SdpProblem:
    """Maximize (or minimize) a linear objective over PSD blocks and scalars.

    Hermitian blocks are handled through their real ``2d x 2d`` embedding.  A
    coefficient ``C`` on a Hermitian block contributes ``Re Tr(C X)``.
    """

    def __init__(self):
        self.blocks: dict[str, Block] = {}
        self.scalars: dict[str, Scalar] = {}
        self.constraints: list[Constraint] = []
        self.objective_scalars: dict[str, float] = {}
        self.objective_blocks: dict[str, np.ndarray] = {}
        self.sense = "max"

    # -- declaration ---------------------------------------------------------

    def add_block(self, name: str, size: int, hermitian: bool = True) -> str:
        if name in self.blocks or name in self.scalars:
            raise MalformedProblem(f"duplicate variable name {name!r}")
        if size < 1:
            raise MalformedProblem(f"block {name!r} needs a positive size")
        self.blocks[name] = Block(name, int(size), hermitian)
        return name

    def add_scalar(self, name: str, lower: float | None = None, upper: float | None = None) -> str:
        if name in self.blocks or name in self.scalars:
            raise MalformedProblem(f"duplicate variable name {name!r}")
        if lower is not None and upper is not None and upper < lower:
            raise MalformedProblem(f"scalar {name!r} has empty bounds [{lower}, {upper}]")
        self.scalars[name] = Scalar(name, lower, upper)
        return name

    def add_constraint(self, blocks: Mapping[str, np.ndarray] | None = None,
                       scalars: Mapping[str, float] | None = None, rhs: float = 0.0) -> None:
        blocks = {k: np.asarray(v) for k, v in (blocks or {}).items()}
        scalars = {k: float(v) for k, v in (scalars or {}).items()}
        for name, c in blocks.items():
            blk = self.blocks.get(name)
            if blk is None:
                raise MalformedProblem(f"unknown block {name!r}")
            if c.shape != (blk.size, blk.size):
                raise MalformedProblem(f"coefficient for {name!r} has shape {c.shape}, expected {(blk.size,) * 2}")
            if not np.allclose(c, c.conj().T, atol=1e-12):
                raise MalformedProblem(f"coefficient for {name!r} is not symmetric/Hermitian")
            if not blk.hermitian and np.iscomplexobj(c) and np.any(c.imag):
                raise MalformedProblem(f"complex coefficient on real block {name!r}")
        for name in scalars:
            if name not in self.scalars:
                raise MalformedProblem(f"unknown scalar {name!r}")
        self.constraints.append(Constraint(blocks, scalars, float(rhs)))

    def add_matrix_constraint(self, blocks: Mapping[str, float], scalars: Mapping[str, np.ndarray] | None = None,
                              rhs: np.ndarray | None = None) -> None:
        """Impose ``sum_b c_b X_b + sum_s s F_s = R`` for ``d x d`` Hermitian blocks.

        Expands into ``d**2`` real equalities along an orthonormal Hermitian basis.
        """
        for b in blocks:
            if b not in self.blocks:
                raise MalformedProblem(f"unknown block {b!r}")
        sizes = {self.blocks[b].size for b in blocks}
        if len(sizes) != 1:
            raise MalformedProblem("matrix constraint mixes block sizes")
        (d,) = sizes
        kinds = {self.blocks[b].hermitian for b in blocks}
        if len(kinds) != 1:
            raise MalformedProblem("matrix constraint mixes real and Hermitian blocks")
        scalars = {k: np.asarray(v, dtype=complex) for k, v in (scalars or {}).items()}
        rhs = np.zeros((d, d)) if rhs is None else np.asarray(rhs, dtype=complex)
        basis = orthonormal_basis(d)
        if kinds == {False}:
            # real symmetric blocks only see the real part of the basis
            basis = [e.real for e in basis if not np.any(e.imag)]
        for e in basis:
            self.add_constraint(
                {b: c * e for b, c in blocks.items()},
                {s: float(np.trace(e @ f).real) for s, f in scalars.items()},
                float(np.trace(e @ rhs).real),
            )

    def set_objective(self, scalars: Mapping[str, float] | None = None,
                      blocks: Mapping[str, np.ndarray] | None = None, sense: str = "max") -> None:
        if sense not in ("max", "min"):
            raise MalformedProblem(f"sense must be 'max' or 'min', got {sense!r}")
        self.objective_scalars = {k: float(v) for k, v in (scalars or {}).items()}
        self.objective_blocks = {k: np.asarray(v) for k, v in (blocks or {}).items()}
        for k in self.objective_scalars:
            if k not in self.scalars:
                raise MalformedProblem(f"unknown scalar {k!r} in objective")
        for k in self.objective_blocks:
            if k not in self.blocks:
                raise MalformedProblem(f"unknown block {k!r} in objective")
        self.sense = sense

    @property
    def has_objective(self) -> bool:
        return bool(self.objective_scalars or self.objective_blocks)

    # -- inspection ----------------------------------------------------------

    def real_coefficient(self, name: str, c: np.ndarray) -> np.ndarray:
        """Coefficient acting on the real (embedded) block variable."""
        if self.blocks[name].hermitian:
            return embed_real(c) / 2
        return np.asarray(c, dtype=float)

    def dimension(self) -> int:
        n = sum(b.real_size * (b.real_size + 1) // 2 for b in self.blocks.values())
        return n + len(self.scalars)

    def residuals(self, block_values: Mapping[str, np.ndarray], scalar_values: Mapping[str, float]) -> np.ndarray:
        """Constraint residuals ``lhs - rhs`` evaluated on user-level values."""
        out = np.empty(len(self.constraints))
        for k, con in enumerate(self.constraints):
            lhs = sum(float(np.vdot(c, block_values[b]).real) for b, c in con.blocks.items())
            lhs += sum(v * scalar_values[s] for s, v in con.scalars.items())
            out[k] = lhs - con.rhs
        return out

    def objective_value(self, block_values, scalar_values) -> float:
        val = sum(v * scalar_values[s] for s, v in self.objective_scalars.items())
        val += sum(float(np.vdot(c, block_values[b]).real) for b, c in self.objective_blocks.items())
        return float(val)

    def to_json(self) -> dict:
        """Debug dump: blocks, constraints as sparse triplets on the real blocks, objective."""
        def triplets(name, c):
            r = self.real_coefficient(name, c)
            i, j = np.nonzero(np.abs(r) > 0)
            return [[int(a), int(b), float(r[a, b])] for a, b in zip(i, j)]

        return {
            "blocks": [{"id": b.name, "size": b.real_size, "hermitian": b.hermitian} for b in self.blocks.values()],
            "scalars": [{"id": s.name, "lower": s.lower, "upper": s.upper} for s in self.scalars.values()],
            "constraints": [
                {
                    "blocks": {n: triplets(n, c) for n, c in con.blocks.items()},
                    "scalars": con.scalars,
                    "rhs": con.rhs,
                }
                for con in self.constraints
            ],
            "objective": {
                "sense": self.sense,
                "scalars": self.objective_scalars,
                "blocks": {n: triplets(n, c) for n, c in self.objective_blocks.items()},
            },
        }


@dataclass
class SdpSolution:
    status: Status
    objective: float = float("nan")
    blocks: dict[str, np.ndarray] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    primal_residual: float = float("inf")
    dual_gap: float = float("inf")
    iterations: int = 0
    margin: float | None = None
    witness: np.ndarray | None = None
    witness_violation: float | None = None
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL
