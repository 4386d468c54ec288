"""Conversions between equivalent forms of simulation certificates."""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..hermitian import antipodal, to_bloch
from ..povm import PAULI, JointMeasurement, PostProcessingMap, Povm, antipodal_povm, depolarize_array, post_process
from .certificates import (
    FixedAssignmentCertificate,
    JointCertificate,
    KOutcomeCertificate,
    KOutcomeComponent,
    ProjectiveCertificate,
)

TOL = 1e-7


def _reconstruct_k_outcome(cert: KOutcomeCertificate) -> np.ndarray:
    return sum(c.weight * cert.embedded(c) for c in cert.components)


def certificate_to_joint_table(cert: KOutcomeCertificate, target: Povm, tol: float = TOL) -> JointMeasurement:
    """Arrange a k-outcome decomposition as an ``n x C(n,k)`` joint measurement.

    Column ``j`` holds ``p_j B^(j)`` for the ``j``-th ``k``-subset in
    lexicographic order; row sums reproduce the depolarised target and column
    sums are ``p_j I``.
    """
    if cert.n != target.n:
        raise ValueError(f"certificate has {cert.n} outcomes, target has {target.n}")
    recon = _reconstruct_k_outcome(cert)
    err = float(np.max(np.abs(recon - depolarize_array(target.array, cert.visibility))))
    if err > tol:
        raise ValueError(f"certificate does not reproduce the target (error {err:.3g})")
    subsets = list(itertools.combinations(range(cert.n), cert.k))
    col = {s: j for j, s in enumerate(subsets)}
    d = target.dim
    table = np.zeros((cert.n, len(subsets), d, d), dtype=complex)
    for c in cert.components:
        support = tuple(sorted(c.support))
        if len(support) < cert.k:
            support = next(s for s in subsets if set(c.support) <= set(s))
        j = col[support]
        for i, e in zip(c.support, c.effects):
            table[i, j] += c.weight * e
    return JointMeasurement(table, validate=False)


def joint_table_to_certificate(table: JointMeasurement, k: int, visibility: float) -> KOutcomeCertificate:
    """Inverse of :func:`certificate_to_joint_table`: each column becomes one component."""
    arr = table.array
    n, cols = arr.shape[0], arr.shape[1]
    d = table.dim
    subsets = list(itertools.combinations(range(n), k))
    comps = []
    for j in range(cols):
        column = arr[:, j]
        w = float(np.trace(column.sum(axis=0)).real) / d
        if w <= 1e-13:
            continue
        if cols == len(subsets):
            support = subsets[j]
        else:
            norms = np.abs(column).reshape(n, -1).max(axis=1)
            support = tuple(sorted(np.argsort(-norms)[:k]))
        nulls = [i for i in range(n) if i not in support]
        if nulls and np.max(np.abs(column[nulls])) > TOL:
            raise ValueError(f"column {j} has more than {k} non-null effects")
        comps.append(KOutcomeComponent(tuple(support), w, column[list(support)] / w))
    return KOutcomeCertificate(visibility, n, k, comps)


def extract_projective_decomposition(target: Povm, joint: JointMeasurement, visibility: float = 1.0,
                                     tol: float = TOL) -> ProjectiveCertificate:
    """Turn a joint measurement for ``{A, antipodal(A)}`` into projective simulators of ``A``.

    ``target`` is the POVM the joint refers to (already depolarised, if at
    all); ``visibility`` is recorded on the certificate.  The joint is first
    symmetrised, ``N_ab = (M_ab + antipodal(M_ba)) / 2``, so that
    ``N_ab + N_ba`` is proportional to the identity; every off-diagonal pair
    then gives an unbiased dichotomic POVM, split into a projective part and
    a trivial remainder.
    """
    if target.dim != 2:
        raise ValueError("projective decomposition is implemented for qubits only")
    n = target.n
    arr = joint.array
    if arr.shape[:2] != (n, n) or joint.m != 2:
        raise ValueError(f"joint measurement must have outcome shape ({n}, {n})")
    anti = antipodal_povm(target).array
    err = max(float(np.max(np.abs(arr.sum(axis=1) - target.array))),
              float(np.max(np.abs(arr.sum(axis=0) - anti))))
    if err > tol:
        raise ValueError(f"joint marginals do not match the target and its antipodal (error {err:.3g})")
    eye = np.eye(2)
    anti_t = np.array([[antipodal(arr[b, a]).matrix for b in range(n)] for a in range(n)])
    sym = (arr + anti_t) / 2
    coeff = np.trace(arr, axis1=-2, axis2=-1).real / 2
    weights, comps = [], []
    trivial = np.zeros((n, 2, 2), dtype=complex)
    for a in range(n):
        trivial[a] += sym[a, a]
        for b in range(a + 1, n):
            w = coeff[a, b] + coeff[b, a]
            pair = sym[a, b] + sym[b, a]
            if np.max(np.abs(pair - w * eye)) > tol:
                raise ValueError(f"symmetrised pair ({a}, {b}) is not proportional to the identity")
            if w <= 1e-15:
                trivial[a] += sym[a, b]
                trivial[b] += sym[b, a]
                continue
            u = to_bloch(sym[a, b] / w).vector
            r = min(2 * float(np.linalg.norm(u)), 1.0)
            if r > 1e-12:
                uhat = u / np.linalg.norm(u)
                proj = np.zeros((n, 2, 2), dtype=complex)
                proj[a] = (eye + np.tensordot(uhat, PAULI, axes=1)) / 2
                proj[b] = (eye - np.tensordot(uhat, PAULI, axes=1)) / 2
                weights.append(w * r)
                comps.append(proj)
            trivial[a] += w * (1 - r) * eye / 2
            trivial[b] += w * (1 - r) * eye / 2
    # What remains in ``trivial`` is proportional to I up to rounding; make it exact.
    tr = np.trace(trivial, axis1=-2, axis2=-1).real / 2
    triv_w = float(tr.sum())
    if triv_w > 1e-12:
        triv = np.clip(tr, 0, None)[:, None, None] * eye / np.clip(tr, 0, None).sum()
    else:
        # nothing left but rounding noise
        triv_w, triv = 0.0, np.repeat(eye[None] / n, n, axis=0)
    proj_arr = np.array(comps) if comps else np.zeros((0, n, 2, 2), dtype=complex)
    return ProjectiveCertificate(visibility, np.array(weights), proj_arr, triv_w, triv)


def symmetric_pairs_residual(joint: JointMeasurement) -> float:
    """Largest deviation of ``N_ab + N_ba`` from a multiple of I after symmetrisation."""
    arr = joint.array
    n = arr.shape[0]
    worst = 0.0
    for a in range(n):
        for b in range(n):
            nab = (arr[a, b] + antipodal(arr[b, a]).matrix) / 2
            nba = (arr[b, a] + antipodal(arr[a, b]).matrix) / 2
            s = nab + nba
            worst = max(worst, float(np.max(np.abs(s - np.trace(s).real / 2 * np.eye(2)))))
    return worst


def antipodal_joint_table(target: Povm, cert: KOutcomeCertificate) -> tuple[Povm, JointMeasurement]:
    """Swap the embedding of every dichotomic component to get ``A~`` and a joint table for ``{A, A~}``.

    ``M[a1, a2]`` is the effect of the ``{a1, a2}`` component placed at ``a1``;
    the diagonal is zero.  If all components are unbiased, ``A~`` is the
    antipodal measurement of ``target``.
    """
    if cert.k != 2:
        raise ValueError("antipodal table needs a certificate with dichotomic components")
    n, d = cert.n, target.dim
    if n != target.n:
        raise ValueError(f"certificate has {n} outcomes, target has {target.n}")
    table = np.zeros((n, n, d, d), dtype=complex)
    for c in cert.components:
        if len(c.support) != 2:
            raise ValueError("component is not dichotomic")
        i, j = c.support
        table[i, j] += c.weight * c.effects[0]
        table[j, i] += c.weight * c.effects[1]
    tilde = Povm(table.sum(axis=0), tol=1e-7)
    return tilde, JointMeasurement(table, validate=False)


def process_set(targets: Sequence[Povm], pre: np.ndarray,
                posts: Sequence[Sequence[PostProcessingMap | None]]) -> list[Povm]:
    """Classically process a set: ``A~^(k) = sum_l p'(l|k) post_process(A^(l), q'_{k,l})``.

    ``pre[k, l] = p'(l | k)``; ``posts[k][l]`` maps outcomes of target ``l``
    to those of output ``k`` (may be ``None`` where ``pre[k, l] == 0``).
    """
    pre = np.asarray(pre, dtype=float)
    if pre.ndim != 2 or pre.shape[1] != len(targets):
        raise ValueError(f"pre-processing must have shape (K, {len(targets)})")
    if np.any(pre < -1e-12) or not np.allclose(pre.sum(axis=1), 1, atol=1e-9):
        raise ValueError("pre-processing rows must be probability distributions")
    out = []
    for k, row in enumerate(pre):
        acc = None
        for l, (p, a) in enumerate(zip(row, targets)):
            if p == 0:
                continue
            q = posts[k][l]
            if q is None:
                raise ValueError(f"missing post-processing for output {k}, input {l}")
            part = p * post_process(a, q).array
            if acc is not None and acc.shape != part.shape:
                raise ValueError(f"post-processings for output {k} disagree on the outcome count")
            acc = part if acc is None else acc + part
        out.append(Povm(acc))
    return out


def collapse_shared_preprocessing(cert: FixedAssignmentCertificate, tol: float = 1e-12) -> JointCertificate:
    """Merge simulators whose targets all share one pre-processing row into a single joint measurement."""
    w = cert.weights
    if not np.allclose(w, w[0], atol=tol):
        raise ValueError("targets do not share the same pre-processing")
    acc = None
    for j, sim in enumerate(cert.simulators):
        if w[0, j] == 0:
            continue
        if sim is None or sim.targets != tuple(range(w.shape[0])):
            raise ValueError(f"simulator {j} does not cover every target")
        acc = w[0, j] * sim.joint if acc is None else acc + w[0, j] * sim.joint
    return JointCertificate(cert.visibility, JointMeasurement(acc, validate=False))
