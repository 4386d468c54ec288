import numpy as np
import pytest
from hypothesis import given, strategies as st

from povmsim.hermitian import (
    DensityMatrix,
    DimensionError,
    HermitianOperator,
    antipodal,
    embed_real,
    from_bloch,
    gell_mann_basis,
    is_psd,
    jacobi_eigvalsh,
    min_eigenvalue,
    operator_from_json,
    operator_to_json,
    orthonormal_basis,
    to_bloch,
    unembed_real,
)
from povmsim.povm import PAULI

from strategies import hermitian_matrices, seeds


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gell_mann_orthogonality(d):
    lam = gell_mann_basis(d)
    assert lam.shape == (d * d - 1, d, d)
    gram = np.einsum("aij,bji->ab", lam, lam)
    assert np.allclose(gram, 2 * np.eye(d * d - 1), atol=1e-13)
    assert np.allclose(np.trace(lam, axis1=1, axis2=2), 0)
    assert np.allclose(lam, np.swapaxes(lam, 1, 2).conj())


def test_qubit_basis_is_pauli():
    assert np.allclose(gell_mann_basis(2), PAULI)


def test_qutrit_basis_standard_order():
    lam = gell_mann_basis(3)
    assert np.allclose(lam[0], [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert np.allclose(lam[2], np.diag([1, -1, 0]))
    assert np.allclose(lam[7], np.diag([1, 1, -2]) / np.sqrt(3))


def test_orthonormal_basis_complete():
    for d in (2, 3):
        e = orthonormal_basis(d)
        gram = np.einsum("aij,bji->ab", e, e).real
        assert np.allclose(gram, np.eye(d * d))


def test_dimension_errors():
    with pytest.raises(DimensionError):
        gell_mann_basis(1)
    with pytest.raises(DimensionError):
        from_bloch(0.5, [0, 0], 2)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        HermitianOperator([[0, 1], [0, 0]])


@given(hermitian_matrices())
def test_bloch_round_trip(m):
    a, v = to_bloch(HermitianOperator(m))
    back = from_bloch(a, v, m.shape[0])
    assert np.allclose(back.matrix, m, atol=1e-12)


@given(hermitian_matrices())
def test_antipodal_involution_and_trace(m):
    h = HermitianOperator(m)
    f = antipodal(h)
    assert np.allclose(antipodal(f).matrix, m, atol=1e-12)
    assert np.isclose(f.trace(), h.trace())
    a, v = to_bloch(f)
    assert np.allclose(v, -to_bloch(h).vector)


@given(hermitian_matrices())
def test_embedding_spectrum_doubles(m):
    ev = np.linalg.eigvalsh(m)
    big = np.linalg.eigvalsh(embed_real(m))
    assert np.allclose(np.sort(np.repeat(ev, 2)), big, atol=1e-10)
    assert np.allclose(unembed_real(embed_real(m)), m)


@given(seeds, st.integers(2, 4))
def test_unembed_preserves_psd(seed, d):
    g = np.random.default_rng(seed).normal(size=(2 * d, 2 * d))
    y = g @ g.T
    assert min_eigenvalue(unembed_real(y)) >= -1e-10


@given(hermitian_matrices(2, 5))
def test_jacobi_matches_lapack(m):
    assert np.allclose(jacobi_eigvalsh(m), np.linalg.eigvalsh(m), atol=1e-10)


def test_jacobi_real_symmetric():
    a = np.array([[2.0, 1, 0], [1, 2, 1], [0, 1, 2]])
    expected = 2 + np.array([-np.sqrt(2), 0, np.sqrt(2)])
    assert np.allclose(jacobi_eigvalsh(a), expected, atol=1e-13)


def test_psd_and_arithmetic():
    h = HermitianOperator(np.diag([1.0, -1e-12]))
    assert is_psd(h)
    assert not is_psd(HermitianOperator(np.diag([1.0, -1e-3])))
    i2 = HermitianOperator.identity(2)
    assert (i2 + i2 - i2) == i2
    assert np.isclose((i2 * 3).trace(), 6)


def test_density_matrix():
    rho = DensityMatrix.pure([1, 1j])
    assert np.isclose(np.trace(rho.matrix).real, 1)
    assert np.allclose(DensityMatrix.maximally_mixed(3).matrix, np.eye(3) / 3)
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.0, 1.0]))


@given(hermitian_matrices())
def test_json_round_trip(m):
    h = HermitianOperator(m)
    back = operator_from_json(operator_to_json(h))
    assert np.allclose(back.matrix, m, atol=1e-11)


def test_json_bloch_literal():
    h = operator_from_json({"dim": 2, "bloch": {"a": 0.5, "v": [0, 0, 0.5]}})
    assert np.allclose(h.matrix, np.diag([1, 0]))
    with pytest.raises(ValueError):
        operator_from_json({"re": [[1]]})
