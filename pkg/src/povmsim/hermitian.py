"""Hermitian operator algebra with generalized Pauli (Bloch) decompositions.

The traceless basis ``lambda_k`` follows the Gell-Mann construction and is
normalised so that ``Tr(lambda_i lambda_j) = 2 delta_ij``.  For ``d = 2`` it
is ``(sigma_x, sigma_y, sigma_z)``; for ``d = 3`` the eight Gell-Mann
matrices in their usual order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12


class DimensionError(ValueError):
    """Operand dimensions do not agree."""


@lru_cache(maxsize=None)
def _basis(d: int) -> np.ndarray:
    mats = []
    for k in range(1, d):
        for j in range(k):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats += [sym, anti]
        diag = np.zeros(d, dtype=complex)
        diag[:k] = 1.0
        diag[k] = -k
        mats.append(np.sqrt(2.0 / (k * (k + 1))) * np.diag(diag))
    out = np.array(mats)
    out.setflags(write=False)
    return out


def gell_mann_basis(d: int) -> np.ndarray:
    """Return the ``d**2 - 1`` traceless Hermitian basis matrices, shape (d²-1, d, d)."""
    if d < 2:
        raise DimensionError(f"dimension must be >= 2, got {d}")
    return _basis(int(d))


@lru_cache(maxsize=None)
def orthonormal_basis(d: int) -> np.ndarray:
    """Identity plus Gell-Mann basis, orthonormal under the trace inner product."""
    out = np.concatenate([np.eye(d, dtype=complex)[None] / np.sqrt(d), gell_mann_basis(d) / np.sqrt(2)])
    out.setflags(write=False)
    return out


class HermitianOperator:
    """Immutable ``d x d`` complex Hermitian matrix."""

    __slots__ = ("_m",)

    def __init__(self, matrix, *, tol: float = HERMITIAN_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 2:
            raise DimensionError("dimension must be >= 2")
        scale = max(1.0, float(np.max(np.abs(m))))
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > tol * scale:
            raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def trace(self) -> float:
        return float(np.trace(self._m).real)

    def __add__(self, other: HermitianOperator) -> HermitianOperator:
        return HermitianOperator(self._m + _as_matrix(other))

    def __sub__(self, other: HermitianOperator) -> HermitianOperator:
        return HermitianOperator(self._m - _as_matrix(other))

    def __mul__(self, c: float) -> HermitianOperator:
        return HermitianOperator(float(c) * self._m)

    __rmul__ = __mul__

    def __neg__(self) -> HermitianOperator:
        return HermitianOperator(-self._m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self._m, other._m)

    def __hash__(self):
        return hash(self._m.tobytes())

    def allclose(self, other, atol: float = 1e-10) -> bool:
        o = _as_matrix(other)
        return o.shape == self._m.shape and bool(np.allclose(self._m, o, rtol=0, atol=atol))

    def __repr__(self) -> str:
        a, v = to_bloch(self)
        return f"HermitianOperator(dim={self.dim}, a={a:.6g}, v={np.array2string(v, precision=4)})"

    @classmethod
    def identity(cls, d: int) -> HermitianOperator:
        return cls(np.eye(d))


def _as_matrix(h) -> np.ndarray:
    return h.matrix if isinstance(h, HermitianOperator) else np.asarray(h, dtype=complex)


@dataclass(frozen=True)
class BlochDecomposition:
    identity_coeff: float
    vector: np.ndarray

    def __iter__(self):
        yield self.identity_coeff
        yield self.vector


def from_bloch(a: float, v: Sequence[float], d: int) -> HermitianOperator:
    """Build ``a*I + sum_k v_k lambda_k``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (d * d - 1,):
        raise DimensionError(f"Bloch vector for d={d} needs {d * d - 1} entries, got {v.shape}")
    return HermitianOperator(a * np.eye(d) + np.tensordot(v, gell_mann_basis(d), axes=1))


def to_bloch(h: HermitianOperator) -> BlochDecomposition:
    m = _as_matrix(h)
    d = m.shape[0]
    a = float(np.trace(m).real) / d
    v = np.einsum("kij,ji->k", gell_mann_basis(d), m).real / 2
    return BlochDecomposition(a, v)


def eigenvalues(h) -> np.ndarray:
    """Ascending eigenvalues (LAPACK)."""
    return np.linalg.eigvalsh(_as_matrix(h))


def min_eigenvalue(h) -> float:
    return float(eigenvalues(h)[0])


def is_psd(h, tol: float = 1e-9) -> bool:
    return min_eigenvalue(h) >= -tol


def antipodal(h: HermitianOperator) -> HermitianOperator:
    """Flip the sign of the traceless part: ``a I + v.lambda -> a I - v.lambda``."""
    m = _as_matrix(h)
    d = m.shape[0]
    return HermitianOperator(2 * np.trace(m).real / d * np.eye(d) - m)


def embed_real(h) -> np.ndarray:
    """Real symmetric ``2d x 2d`` embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    m = _as_matrix(h)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def unembed_real(y: np.ndarray) -> np.ndarray:
    """Project a real symmetric ``2d x 2d`` matrix back to a complex Hermitian ``d x d`` one.

    This is the orthogonal projection onto the image of :func:`embed_real`; it
    maps PSD matrices to PSD matrices.
    """
    y = np.asarray(y, dtype=float)
    d = y.shape[0] // 2
    re = (y[:d, :d] + y[d:, d:]) / 2
    im = (y[d:, :d] - y[:d, d:]) / 2
    h = re + 1j * im
    return (h + h.conj().T) / 2


def jacobi_eigvalsh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Kept independent of LAPACK; used to cross-check :func:`eigenvalues`.
    Complex Hermitian input is handled through :func:`embed_real`, whose
    spectrum is that of the input with every eigenvalue doubled.
    """
    a = np.array(a)
    if np.iscomplexobj(a):
        return jacobi_eigvalsh(embed_real(a), tol, max_sweeps)[::2]
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2) * 2)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


class DensityMatrix:
    """PSD operator with unit trace."""

    __slots__ = ("op",)

    def __init__(self, op, tol: float = 1e-10):
        op = op if isinstance(op, HermitianOperator) else HermitianOperator(op)
        if abs(op.trace() - 1) > tol:
            raise ValueError(f"density matrix trace is {op.trace():.12g}, expected 1")
        if not is_psd(op, tol):
            raise ValueError(f"density matrix is not PSD (min eigenvalue {min_eigenvalue(op):.3g})")
        self.op = op

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @classmethod
    def pure(cls, psi) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> DensityMatrix:
        return cls(np.eye(d) / d)


def operator_from_json(obj: dict) -> HermitianOperator:
    """Parse ``{"dim", "re", "im"}`` or ``{"dim", "bloch": {"a", "v"}}``."""
    try:
        d = int(obj["dim"])
        if "bloch" in obj:
            return from_bloch(float(obj["bloch"]["a"]), obj["bloch"]["v"], d)
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed operator literal: {exc!r}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise DimensionError(f"operator literal entries do not match dim={d}")
    return HermitianOperator(re + 1j * im, tol=1e-9)


def operator_to_json(h, digits: int = 12) -> dict:
    m = _as_matrix(h)
    rnd = lambda x: float(f"{x:.{digits}g}")  # noqa: E731
    return {
        "dim": int(m.shape[0]),
        "re": [[rnd(x) for x in row] for row in m.real],
        "im": [[rnd(x) for x in row] for row in m.imag],
    }
