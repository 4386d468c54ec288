"""Solver-free checks: certificate reassembly, Born-rule statistics, a grid search and monotonicity trials."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .povm import PAULI, JointMeasurement, PostProcessingMap, Povm, depolarize_array
from .simulability.certificates import (
    FixedAssignmentCertificate,
    JointCertificate,
    KOutcomeCertificate,
    ProjectiveCertificate,
    SimulationCertificate,
)
from .simulability.programs import jm_robustness
from .simulability.transforms import process_set
from .sdp import Settings


@dataclass
class VerificationReport:
    passed: bool
    max_error: float
    per_effect_errors: list = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "max_error": float(f"{self.max_error:.12g}"),
            "per_effect_errors": [[float(f"{e:.12g}") for e in row] for row in self.per_effect_errors],
            "notes": list(self.notes),
        }


def _as_list(targets) -> list[Povm]:
    return [targets] if isinstance(targets, Povm) else list(targets)


class _Checker:
    """Accumulates the worst violation of each kind while a certificate is reassembled."""

    def __init__(self, tol: float):
        self.tol = tol
        self.worst = 0.0
        self.notes: list[str] = []

    def bound(self, value: float, what: str) -> None:
        value = float(value)
        if value > self.worst:
            self.worst = value
        if value > self.tol:
            self.notes.append(f"{what}: {value:.3g}")

    def psd(self, ops: np.ndarray, what: str) -> None:
        ops = np.asarray(ops)
        if ops.size == 0:
            return
        d = ops.shape[-1]
        lo = np.linalg.eigvalsh(ops.reshape(-1, d, d)).min()
        self.bound(max(0.0, -lo), f"{what} has negative eigenvalue")

    def normalized(self, ops: np.ndarray, weight: float, what: str) -> None:
        d = ops.shape[-1]
        total = np.asarray(ops).reshape(-1, d, d).sum(axis=0)
        self.bound(weight * np.abs(total - np.eye(d)).max(), f"{what} does not sum to identity")

    def weights(self, w: np.ndarray, what: str, total: float | None = 1.0) -> None:
        w = np.asarray(w, dtype=float)
        if w.size:
            self.bound(max(0.0, -w.min()), f"{what} has a negative weight")
        if total is not None:
            self.bound(abs(w.sum() - total), f"{what} do not sum to {total}")


def _reassemble(targets: list[Povm], cert: SimulationCertificate, chk: _Checker) -> list[np.ndarray]:
    """Rebuild every target from the certificate, checking the pieces on the way."""
    if isinstance(cert, JointCertificate):
        arr = cert.joint.array
        if arr.ndim - 2 != len(targets):
            raise ValueError(f"joint has {arr.ndim - 2} outcome axes for {len(targets)} targets")
        chk.psd(arr, "joint effect")
        chk.normalized(arr, 1.0, "joint measurement")
        axes = range(arr.ndim - 2)
        return [arr.sum(axis=tuple(a for a in axes if a != l)) for l in range(len(targets))]

    if isinstance(cert, KOutcomeCertificate):
        if len(targets) != 1:
            raise ValueError("a k-outcome certificate refers to a single target")
        if cert.n != targets[0].n:
            raise ValueError(f"certificate has {cert.n} outcomes, target has {targets[0].n}")
        chk.weights(cert.weights, "component weights")
        d = targets[0].dim
        out = np.zeros((cert.n, d, d), dtype=complex)
        for c in cert.components:
            if len(c.support) > cert.k or len(set(c.support)) != len(c.support):
                chk.bound(np.inf, f"component on {c.support} is not a {cert.k}-outcome POVM")
                continue
            chk.psd(c.effects, f"component {c.support}")
            chk.normalized(c.effects, c.weight, f"component {c.support}")
            out += c.weight * cert.embedded(c)
        return [out]

    if isinstance(cert, FixedAssignmentCertificate):
        w = np.asarray(cert.weights, dtype=float)
        if w.shape != (len(targets), len(cert.simulators)):
            raise ValueError(f"weights have shape {w.shape}, expected {(len(targets), len(cert.simulators))}")
        for l, row in enumerate(w):
            chk.weights(row, f"pre-processing of target {l}")
        out = [np.zeros_like(a.array) for a in targets]
        for j, sim in enumerate(cert.simulators):
            users = np.nonzero(w[:, j] > 0)[0]
            if sim is None:
                if len(users):
                    chk.bound(np.inf, f"simulator {j} is missing but carries weight")
                continue
            arr = np.asarray(sim.joint)
            chk.psd(arr, f"simulator {j}")
            chk.normalized(arr, float(w[:, j].max(initial=0.0)), f"simulator {j}")
            axes = tuple(range(arr.ndim - 2))
            for l in users:
                if l not in sim.targets:
                    chk.bound(np.inf, f"target {l} uses simulator {j} which does not produce it")
                    continue
                pos = sim.targets.index(l)
                marg = arr.sum(axis=tuple(a for a in axes if a != pos))
                if marg.shape != out[l].shape:
                    raise ValueError(f"simulator {j} gives target {l} the wrong number of outcomes")
                out[l] += w[l, j] * marg
        return out

    if isinstance(cert, ProjectiveCertificate):
        if len(targets) != 1:
            raise ValueError("a projective certificate refers to a single target")
        n, d = cert.n, cert.trivial.shape[-1]
        if n != targets[0].n:
            raise ValueError(f"certificate has {n} outcomes, target has {targets[0].n}")
        chk.weights(np.append(cert.weights, cert.trivial_weight), "mixture weights")
        out = cert.trivial_weight * np.asarray(cert.trivial)
        for c, (wc, proj) in enumerate(zip(cert.weights, cert.projective)):
            chk.psd(proj, f"projective component {c}")
            chk.normalized(proj, wc, f"projective component {c}")
            chk.bound(wc * np.abs(proj @ proj - proj).max(), f"projective component {c} is not projective")
            out = out + wc * proj
        triv = np.asarray(cert.trivial)
        chk.psd(triv, "trivial component")
        chk.normalized(triv, cert.trivial_weight, "trivial component")
        tr = np.trace(triv, axis1=-2, axis2=-1).real / d
        chk.bound(cert.trivial_weight * np.abs(triv - tr[:, None, None] * np.eye(d)).max(),
                  "trivial component is not proportional to identity")
        return [out]

    raise TypeError(f"unknown certificate type {type(cert).__name__}")


def verify_certificate(targets: Povm | Sequence[Povm], cert: SimulationCertificate,
                       tol: float = 1e-7) -> VerificationReport:
    """Reassemble the depolarised targets from ``cert`` and report the worst entrywise error.

    Besides the reconstruction, every simulator effect must be PSD, every
    simulator must be normalised (scaled by the weight it carries), and the
    weights must form probability distributions.
    """
    targets = _as_list(targets)
    chk = _Checker(tol)
    rebuilt = _reassemble(targets, cert, chk)
    per_effect = []
    for l, (a, r) in enumerate(zip(targets, rebuilt)):
        if r.shape != a.array.shape:
            raise ValueError(f"target {l} has shape {a.array.shape}, certificate gives {r.shape}")
        errs = np.abs(r - depolarize_array(a.array, cert.visibility)).reshape(a.n, -1).max(axis=1)
        per_effect.append([float(e) for e in errs])
        chk.bound(errs.max(), f"target {l} reconstruction")
    return VerificationReport(chk.worst <= tol, chk.worst, per_effect, chk.notes)


# ---------------------------------------------------------------------------
# Born-rule statistics

def random_pure_state(rng: np.random.Generator, d: int) -> np.ndarray:
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_mixed_state(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    w = g @ g.conj().T
    return w / np.trace(w).real


def random_states(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    """Half Haar-random pure states, half normalised Wishart mixed states."""
    half = n // 2
    pure = [random_pure_state(rng, d) for _ in range(n - half)]
    mixed = [random_mixed_state(rng, d) for _ in range(half)]
    return np.array(pure + mixed).reshape(n, d, d)


def _probs(ops: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    # Tr(E rho) for every state and every effect: shape (states, *outcomes)
    return np.einsum("...ij,sji->s...", ops, rhos).real


def protocol_statistics(cert: SimulationCertificate, n_targets: int, rhos: np.ndarray) -> list[np.ndarray]:
    """Outcome distributions of the simulation protocol, one ``(states, n_l)`` array per target.

    Simulators are measured and their outcomes are classically coarse-grained
    and mixed; no operator arithmetic is involved after the Born rule.
    """
    if isinstance(cert, JointCertificate):
        p = _probs(cert.joint.array, rhos)
        axes = range(1, p.ndim)
        return [p.sum(axis=tuple(a for a in axes if a != l + 1)) for l in range(n_targets)]
    if isinstance(cert, KOutcomeCertificate):
        out = np.zeros((len(rhos), cert.n))
        for c in cert.components:
            out[:, list(c.support)] += c.weight * _probs(c.effects, rhos)
        return [out]
    if isinstance(cert, FixedAssignmentCertificate):
        outs: list[np.ndarray | None] = [None] * n_targets
        for j, sim in enumerate(cert.simulators):
            if sim is None:
                continue
            p = _probs(np.asarray(sim.joint), rhos)
            axes = range(1, p.ndim)
            for pos, l in enumerate(sim.targets):
                if cert.weights[l, j] == 0:
                    continue
                part = cert.weights[l, j] * p.sum(axis=tuple(a for a in axes if a != pos + 1))
                outs[l] = part if outs[l] is None else outs[l] + part
        return outs
    if isinstance(cert, ProjectiveCertificate):
        out = cert.trivial_weight * _probs(np.asarray(cert.trivial), rhos)
        for w, proj in zip(cert.weights, cert.projective):
            out = out + w * _probs(proj, rhos)
        return [out]
    raise TypeError(f"unknown certificate type {type(cert).__name__}")


def statistics_check(targets: Povm | Sequence[Povm], cert: SimulationCertificate, n_states: int = 1000,
                     tol: float = 1e-6, seed: int = 0) -> VerificationReport:
    """Compare Born statistics of the depolarised targets with those of the protocol on random states.

    ``max_error`` is the largest total-variation distance over states and targets.
    """
    targets = _as_list(targets)
    rng = np.random.default_rng(seed)
    rhos = random_states(rng, targets[0].dim, n_states)
    sims = protocol_statistics(cert, len(targets), rhos)
    per_target, notes, worst = [], [], 0.0
    for l, (a, q) in enumerate(zip(targets, sims)):
        if q is None:
            notes.append(f"no simulator produces target {l}")
            worst = np.inf
            per_target.append([np.inf])
            continue
        p = _probs(depolarize_array(a.array, cert.visibility), rhos)
        tvd = 0.5 * np.abs(p - q).sum(axis=1)
        per_target.append([float(tvd.max())])
        worst = max(worst, float(tvd.max()))
    if worst > tol:
        notes.append(f"max total-variation distance {worst:.3g} over {n_states} states")
    return VerificationReport(worst <= tol, worst, per_target, notes)


# ---------------------------------------------------------------------------
# grid search over joint measurements of two dichotomic qubit POVMs

@dataclass
class GridBound:
    t: float
    certificate: JointCertificate
    report: VerificationReport

    def __float__(self) -> float:
        return self.t


def _plane(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthonormal pair spanning a plane that contains ``a`` and ``b``."""
    basis = []
    for v in (a, b, np.eye(3)[0], np.eye(3)[1], np.eye(3)[2]):
        v = v - sum(np.dot(v, e) * e for e in basis)
        if np.linalg.norm(v) > 1e-9:
            basis.append(v / np.linalg.norm(v))
        if len(basis) == 2:
            return np.array(basis)
    raise AssertionError("unreachable")


def _slack(xs: np.ndarray, a0, a, b0, b, t):
    """Lower and upper end of the admissible identity coefficient for each Bloch point ``xs``."""
    nx = np.linalg.norm(xs, axis=-1)
    lo = np.maximum(nx, a0 + b0 - 1 + np.linalg.norm(xs - t * a - t * b, axis=-1))
    hi = np.minimum(a0 - np.linalg.norm(t * a - xs, axis=-1), b0 - np.linalg.norm(t * b - xs, axis=-1))
    return lo, hi


def qubit_pair_jm_grid(A: Povm, B: Povm, resolution: int = 100, zoom_rounds: int = 2,
                       bisection_tol: float = 1e-6, tol: float = 1e-7) -> GridBound:
    """Certified lower bound on the joint-measurability robustness of two dichotomic qubit POVMs.

    The parent ``M_ij`` is fixed by its first effect ``X = x0 I + x.sigma``; by
    reflection symmetry ``x`` can be taken in the plane of the two Bloch
    vectors, which is gridded at ``resolution`` points per axis.  For each
    grid point the feasible ``x0`` is an explicit interval.  The grid is then
    refined ``zoom_rounds`` times around the best point.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if A.dim != 2 or B.dim != 2 or A.n != 2 or B.n != 2:
        raise ValueError("grid oracle covers pairs of dichotomic qubit POVMs only")
    a0 = np.trace(A.array[0]).real / 2
    b0 = np.trace(B.array[0]).real / 2
    pauli_coeffs = lambda m: np.array([m[0, 1].real, -m[0, 1].imag, (m[0, 0] - m[1, 1]).real / 2])
    a, b = pauli_coeffs(A.array[0]), pauli_coeffs(B.array[0])
    e = _plane(a, b)

    def grid(center, half):
        s = np.linspace(-half, half, resolution)
        g = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2) + center
        return np.vstack([g, center, np.zeros(2)]) @ e

    def best_at(t, pts):
        # the scaled target vectors are exact parents for commuting or nested pairs
        pts = np.vstack([pts, t * a, t * b, t * (a + b) / 2])
        lo, hi = _slack(pts, a0, a, b0, b, t)
        k = int(np.argmax(hi - lo))
        return hi[k] - lo[k], pts[k], lo[k], hi[k]

    def search(pts):
        if best_at(1.0, pts)[0] >= 0:
            return 1.0
        lo_t, hi_t = 0.0, 1.0
        if best_at(0.0, pts)[0] < 0:
            return None
        while hi_t - lo_t > bisection_tol:
            mid = (lo_t + hi_t) / 2
            if best_at(mid, pts)[0] >= 0:
                lo_t = mid
            else:
                hi_t = mid
        return lo_t

    half = min(a0, b0)
    center = np.zeros(2)
    best_t, best_pt = -1.0, None
    for _ in range(zoom_rounds + 1):
        pts = grid(center, half)
        t = search(pts)
        if t is not None and t > best_t:
            _, x, lo, hi = best_at(t, pts)
            best_t, best_pt = t, (x, (lo + hi) / 2)
        if best_pt is None:
            break
        center = best_pt[0] @ e.T
        half *= 4.0 / resolution

    x, x0 = best_pt
    X = x0 * np.eye(2) + np.tensordot(x, PAULI, axes=1)
    da = depolarize_array(A.array, best_t)[0]
    db = depolarize_array(B.array, best_t)[0]
    joint = np.array([[X, da - X], [db - X, np.eye(2) - da - db + X]])
    cert = JointCertificate(best_t, JointMeasurement(joint, validate=False))
    report = verify_certificate([A, B], cert, tol)
    if not report.passed:
        raise ArithmeticError(f"grid certificate failed verification: {report.notes}")
    return GridBound(best_t, cert, report)


# ---------------------------------------------------------------------------
# monotonicity under classical processing

def random_processing(rng: np.random.Generator, targets: Sequence[Povm]):
    """Random pre-processing ``(K x m)`` and post-processings into per-output outcome counts.

    Post-processings are random relabelings blended with a little stochastic
    noise, so that outputs stay informative instead of collapsing to trivial POVMs.
    """
    m = len(targets)
    k_out = int(rng.integers(2, m + 2))
    pre = rng.dirichlet(np.full(m, 0.5), size=k_out)
    pre[pre < 0.05] = 0
    pre /= pre.sum(axis=1, keepdims=True)
    posts = []
    for _ in range(k_out):
        n_out = int(rng.integers(2, 4))
        row = []
        for a in targets:
            relabel = PostProcessingMap.deterministic(rng.integers(0, n_out, size=a.n), n_out).matrix
            noise = rng.dirichlet(np.ones(n_out), size=a.n).T
            lam = rng.uniform(0, 0.3)
            row.append(PostProcessingMap((1 - lam) * relabel + lam * noise))
        posts.append(row)
    return pre, posts


def monotonicity_check(targets: Sequence[Povm], trials: int = 20, seed: int = 0, tol: float = 1e-6,
                       settings: Settings | None = None) -> VerificationReport:
    """Check that classical processing never lowers joint-measurability robustness.

    ``max_error`` is the largest drop ``t_before - t_after`` (0 if none).
    Each trial draws from its own generator spawned from ``seed``.
    """
    targets = list(targets)
    before = jm_robustness(targets, settings).t_star
    drops, notes = [], []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        pre, posts = random_processing(rng, targets)
        after = jm_robustness(process_set(targets, pre, posts), settings).t_star
        drop = before - after
        drops.append(drop)
        if drop > tol:
            notes.append(f"trial {i}: robustness fell from {before:.9f} to {after:.9f}")
    worst = max(0.0, max(drops, default=0.0))
    return VerificationReport(worst <= tol, worst, [drops], notes)
