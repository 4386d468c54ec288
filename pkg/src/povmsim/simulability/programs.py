"""Robustness programs: joint measurability, k-outcome, fixed-assignment and projective simulability.

Every program is linear in its variables and in the visibility ``t``, so each
robustness value is a single SDP ``max t``.  Simulators are never explicit
variables: post-processing is absorbed into joint-measurement (or sub-POVM)
blocks.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import sdp
from ..povm import JointMeasurement, Povm, antipodal_povm, depolarize_array
from .certificates import (
    FixedAssignmentCertificate,
    JointCertificate,
    KOutcomeCertificate,
    KOutcomeComponent,
    SimulationCertificate,
    SimulatorBlock,
)

log = logging.getLogger(__name__)

MAX_JOINT_OUTCOMES = 4096
MAX_SUBSETS = 512


class SolverFailure(RuntimeError):
    """The SDP solver could not certify an answer."""


@dataclass
class Program:
    """An SDP together with the map from its solution to a certificate."""

    problem: sdp.SdpProblem
    decode: Callable[[sdp.SdpSolution, float], SimulationCertificate]
    visibility: float | None = None


@dataclass
class RobustnessResult:
    t_star: float
    certificate: SimulationCertificate
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AssignmentSpec:
    """Fixed pre-processing: ``weights[l, j] = p(j | l)``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2:
            raise ValueError("assignment weights must be a (targets x simulators) matrix")
        if np.any(w < -1e-12) or not np.allclose(w.sum(axis=1), 1, atol=1e-9):
            raise ValueError("each assignment row must be a probability distribution")
        w = np.clip(w, 0, None)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_simulators(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def deterministic(cls, labels: Sequence[int], n_simulators: int | None = None) -> AssignmentSpec:
        j = max(labels) + 1 if n_simulators is None else n_simulators
        w = np.zeros((len(labels), j))
        w[np.arange(len(labels)), list(labels)] = 1.0
        return cls(w)

    def assigned(self, j: int) -> tuple[int, ...]:
        return tuple(int(l) for l in np.nonzero(self.weights[:, j] > 0)[0])


def _affine_parts(arr: np.ndarray):
    """Split ``Phi_t(A) = F + t G`` effectwise."""
    f = depolarize_array(arr, 0.0)
    return f, arr - f


def _add_visibility(p: sdp.SdpProblem, t: float | None) -> None:
    if t is None:
        p.add_scalar("t", 0.0, 1.0)
        p.set_objective({"t": 1.0})


def _target_constraint(p, blocks, f, g, t):
    if t is None:
        p.add_matrix_constraint(blocks, {"t": -g}, f)
    else:
        p.add_matrix_constraint(blocks, None, f + t * g)


def _check_targets(targets: Sequence[Povm]) -> int:
    if not targets:
        raise ValueError("need at least one target measurement")
    dims = {a.dim for a in targets}
    if len(dims) != 1:
        raise ValueError(f"targets live in different dimensions {sorted(dims)}")
    return dims.pop()


# ---------------------------------------------------------------------------
# joint measurability

def jm_program(targets: Sequence[Povm], t: float | None = None) -> Program:
    d = _check_targets(targets)
    shape = tuple(a.n for a in targets)
    if math.prod(shape) > MAX_JOINT_OUTCOMES:
        raise ValueError(f"joint measurement would have {math.prod(shape)} outcomes (limit {MAX_JOINT_OUTCOMES})")
    p = sdp.SdpProblem()
    _add_visibility(p, t)
    tuples = list(itertools.product(*(range(n) for n in shape)))
    names = {idx: p.add_block("M" + ",".join(map(str, idx)), d) for idx in tuples}
    for l, a in enumerate(targets):
        f, g = _affine_parts(a.array)
        for i in range(a.n):
            _target_constraint(p, {names[idx]: 1.0 for idx in tuples if idx[l] == i}, f[i], g[i], t)

    def decode(sol: sdp.SdpSolution, vis: float) -> JointCertificate:
        arr = np.array([sol.blocks[names[idx]] for idx in tuples]).reshape(*shape, d, d)
        return JointCertificate(vis, JointMeasurement(arr, validate=False))

    return Program(p, decode, t)


# ---------------------------------------------------------------------------
# k-outcome simulability

def k_outcome_program(target: Povm, k: int, t: float | None = None, unbiased: bool = False) -> Program:
    n, d = target.n, target.dim
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if math.comb(n, k) > MAX_SUBSETS:
        raise ValueError(f"C({n},{k}) = {math.comb(n, k)} exceeds the subset limit {MAX_SUBSETS}")
    if unbiased and k != 2:
        raise ValueError("unbiased components are only defined for k = 2")
    subsets = list(itertools.combinations(range(n), k))
    p = sdp.SdpProblem()
    _add_visibility(p, t)
    names = {}
    for s_idx, s in enumerate(subsets):
        c = p.add_scalar(f"c{s_idx}", lower=0.0)
        for i in s:
            names[s_idx, i] = p.add_block(f"G{s_idx}_{i}", d)
        eye = np.eye(d)
        p.add_matrix_constraint({names[s_idx, i]: 1.0 for i in s}, {c: -eye}, np.zeros((d, d)))
        if unbiased:
            for i in s[:1]:
                p.add_constraint({names[s_idx, i]: eye}, {c: -d / 2}, 0.0)
    f, g = _affine_parts(target.array)
    for i in range(n):
        blocks = {names[s_idx, i]: 1.0 for s_idx, s in enumerate(subsets) if i in s}
        _target_constraint(p, blocks, f[i], g[i], t)

    def decode(sol: sdp.SdpSolution, vis: float) -> KOutcomeCertificate:
        comps = []
        for s_idx, s in enumerate(subsets):
            g_eff = np.array([sol.blocks[names[s_idx, i]] for i in s])
            w = float(np.trace(g_eff.sum(axis=0)).real) / d
            if w <= 1e-13:
                continue
            comps.append(KOutcomeComponent(s, w, g_eff / w))
        return KOutcomeCertificate(vis, n, k, comps)

    return Program(p, decode, t)


# ---------------------------------------------------------------------------
# fixed pre-processing with several simulators

def fixed_assignment_program(targets: Sequence[Povm], spec: AssignmentSpec, t: float | None = None) -> Program:
    d = _check_targets(targets)
    w = spec.weights
    if w.shape[0] != len(targets):
        raise ValueError(f"assignment has {w.shape[0]} rows for {len(targets)} targets")
    for l in range(len(targets)):
        if not np.any(w[l] > 0):
            raise ValueError(f"target {l} is not assigned to any simulator")
    p = sdp.SdpProblem()
    _add_visibility(p, t)
    sims = []
    for j in range(spec.n_simulators):
        assigned = spec.assigned(j)
        if not assigned:
            sims.append(None)
            continue
        shape = tuple(targets[l].n for l in assigned)
        if math.prod(shape) > MAX_JOINT_OUTCOMES:
            raise ValueError(f"simulator {j} would have {math.prod(shape)} outcomes")
        tuples = list(itertools.product(*(range(n) for n in shape)))
        names = {idx: p.add_block(f"S{j}_" + ",".join(map(str, idx)), d) for idx in tuples}
        p.add_matrix_constraint({nm: 1.0 for nm in names.values()}, None, np.eye(d))
        sims.append((assigned, shape, tuples, names))
    for l, a in enumerate(targets):
        f, g = _affine_parts(a.array)
        for i in range(a.n):
            blocks = {}
            for j, sim in enumerate(sims):
                if sim is None or w[l, j] == 0:
                    continue
                assigned, _, tuples, names = sim
                pos = assigned.index(l)
                for idx in tuples:
                    if idx[pos] == i:
                        blocks[names[idx]] = w[l, j]
            _target_constraint(p, blocks, f[i], g[i], t)

    def decode(sol: sdp.SdpSolution, vis: float) -> FixedAssignmentCertificate:
        out = []
        for sim in sims:
            if sim is None:
                out.append(None)
                continue
            assigned, shape, tuples, names = sim
            arr = np.array([sol.blocks[names[idx]] for idx in tuples]).reshape(*shape, d, d)
            out.append(SimulatorBlock(assigned, arr))
        return FixedAssignmentCertificate(vis, np.array(w), out)

    return Program(p, decode, t)


# ---------------------------------------------------------------------------
# drivers

def is_feasible(program: Program, settings: sdp.Settings | None = None) -> sdp.SdpSolution:
    """Feasibility (margin) solve of a fixed-visibility program."""
    if program.visibility is None:
        raise ValueError("feasibility needs a program built at a fixed visibility")
    return sdp.feasibility(program.problem, settings)


def maximize_visibility(build: Callable[[float | None], Program], settings: sdp.Settings | None = None,
                        method: str = "direct", bisection_tol: float = 1e-7) -> RobustnessResult:
    """Largest ``t`` for which ``build(t)`` is feasible.

    ``method="direct"`` solves one SDP with ``t`` as a variable and falls back
    to bisection if the solver stalls; ``method="bisection"`` always bisects
    over margin-feasibility solves.
    """
    settings = settings or sdp.Settings()
    if method not in ("direct", "bisection"):
        raise ValueError(f"unknown method {method!r}")
    if method == "direct":
        prog = build(None)
        sol = sdp.solve(prog.problem, settings)
        if sol.optimal:
            t = min(max(sol.scalars["t"], 0.0), 1.0)
            if t > 1 - 1e-6:
                # snap to the bound when the full-visibility problem is feasible
                top = build(1.0)
                fsol = sdp.feasibility(top.problem, settings)
                if fsol.optimal:
                    return RobustnessResult(1.0, top.decode(fsol, 1.0), {"method": "direct", "snapped": True})
            cert = prog.decode(sol, t)
            return RobustnessResult(t, cert, {"method": "direct", "iterations": sol.iterations,
                                              "primal_residual": sol.primal_residual, "gap": sol.dual_gap})
        log.warning("direct solve ended with %s (%s); bisecting", sol.status.value, sol.message)
    return _bisect(build, settings, bisection_tol)


def _bisect(build, settings, tol) -> RobustnessResult:
    def probe(t):
        prog = build(t)
        return prog, sdp.feasibility(prog.problem, settings)

    prog, sol = probe(1.0)
    if sol.optimal:
        return RobustnessResult(1.0, prog.decode(sol, 1.0), {"method": "bisection", "solves": 1})
    lo, hi = 0.0, 1.0
    prog, best = probe(0.0)
    if not best.optimal:
        raise SolverFailure(f"program infeasible even at t = 0 ({best.status.value}: {best.message})")
    best_prog = prog
    solves = 2
    while hi - lo > tol:
        mid = (lo + hi) / 2
        prog, sol = probe(mid)
        solves += 1
        if sol.optimal:
            lo, best, best_prog = mid, sol, prog
        elif sol.status is sdp.Status.INFEASIBLE:
            hi = mid
        else:
            raise SolverFailure(f"feasibility solve at t={mid} failed: {sol.message}")
    return RobustnessResult(lo, best_prog.decode(best, lo), {"method": "bisection", "solves": solves})


def jm_robustness(targets: Sequence[Povm], settings: sdp.Settings | None = None,
                  method: str = "direct") -> RobustnessResult:
    """White-noise robustness of joint measurability (single-simulator simulability)."""
    if len(targets) < 2:
        raise ValueError("joint measurability needs at least two targets")
    return maximize_visibility(lambda t: jm_program(targets, t), settings, method)


def subset_compat_profile(targets: Sequence[Povm], size: int, settings: sdp.Settings | None = None) -> dict:
    """Joint-measurability robustness of every ``size``-subset.

    ``max`` is the visibility above which no subset is compatible;
    ``min`` the visibility at or below which every subset is.
    """
    if not 2 <= size <= len(targets):
        raise ValueError(f"subset size must lie in [2, {len(targets)}]")
    values = {}
    for subset in itertools.combinations(range(len(targets)), size):
        values[subset] = jm_robustness([targets[i] for i in subset], settings).t_star
    lo = min(values, key=values.get)
    hi = max(values, key=values.get)
    return {"size": size, "values": values, "min": values[lo], "argmin": lo, "max": values[hi], "argmax": hi}


def k_outcome_robustness(target: Povm, k: int, settings: sdp.Settings | None = None,
                         method: str = "direct", unbiased: bool = False) -> RobustnessResult:
    return maximize_visibility(lambda t: k_outcome_program(target, k, t, unbiased), settings, method)


def fixed_assignment_robustness(targets: Sequence[Povm], spec: AssignmentSpec,
                                settings: sdp.Settings | None = None, method: str = "direct") -> RobustnessResult:
    return maximize_visibility(lambda t: fixed_assignment_program(targets, spec, t), settings, method)


def projective_program(target: Povm, t: float | None = None) -> Program:
    if target.dim != 2:
        raise ValueError("projective simulability is only characterised for qubits")
    return jm_program([target, antipodal_povm(target)], t)


def projective_robustness_qubit(target: Povm, settings: sdp.Settings | None = None,
                                method: str = "direct") -> RobustnessResult:
    """Projective-simulability robustness of a qubit POVM via joint measurability with its antipodal."""
    from .transforms import extract_projective_decomposition

    res = maximize_visibility(lambda t: projective_program(target, t), settings, method)
    joint_cert = res.certificate
    depolarized = Povm(depolarize_array(target.array, res.t_star), tol=1e-7)
    cert = extract_projective_decomposition(depolarized, joint_cert.joint, visibility=res.t_star)
    diag = dict(res.diagnostics, joint_certificate=joint_cert)
    return RobustnessResult(res.t_star, cert, diag)


# ---------------------------------------------------------------------------
# heuristic search over pre-processings (J >= 2 simulators is not an SDP)

def _set_partitions(m: int, max_blocks: int):
    """Restricted-growth labelings of ``m`` items into at most ``max_blocks`` blocks."""
    def rec(prefix, top):
        if len(prefix) == m:
            yield tuple(prefix)
            return
        for lab in range(min(top + 2, max_blocks)):
            yield from rec(prefix + [lab], max(top, lab))
    yield from rec([], -1)


def _simplex_grid(j: int, divisions: int):
    for c in itertools.product(range(divisions + 1), repeat=j):
        if sum(c) == divisions:
            yield np.array(c, dtype=float) / divisions


def heuristic_j_povm_robustness(targets: Sequence[Povm], n_simulators: int, divisions: int = 20,
                                mixed_targets: int = 1, settings: sdp.Settings | None = None) -> dict:
    """Heuristic lower bound on ``J``-simulator robustness.

    Searches every deterministic assignment of targets to simulators, and,
    with ``mixed_targets=1``, every assignment where one target instead mixes
    the simulators with weights on a simplex grid of ``1/divisions`` steps.
    The result is a lower bound, not a proof of optimality.
    """
    m = len(targets)
    best = {"t_star": -1.0, "spec": None, "result": None, "heuristic": True, "evaluated": 0}
    candidates = []
    for labels in _set_partitions(m, n_simulators):
        candidates.append(AssignmentSpec.deterministic(labels, n_simulators))
    if mixed_targets:
        for l in range(m):
            others = [i for i in range(m) if i != l]
            for labels in _set_partitions(m - 1, n_simulators):
                for row in _simplex_grid(n_simulators, divisions):
                    if np.count_nonzero(row) < 2:
                        continue
                    w = np.zeros((m, n_simulators))
                    w[others, list(labels)] = 1.0
                    w[l] = row
                    candidates.append(AssignmentSpec(w))
    for spec in candidates:
        res = fixed_assignment_robustness(targets, spec, settings)
        best["evaluated"] += 1
        if res.t_star > best["t_star"] + 1e-9:
            best.update(t_star=res.t_star, spec=spec, result=res)
    return best
