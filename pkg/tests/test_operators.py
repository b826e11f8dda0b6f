import numpy as np
import pytest

from qcascade.kerr import KerrSpec, dark_state_fock, single_cavity_steady_state
from qcascade.lindblad import build_liouvillian, liouvillian, steady_state
from qcascade.operators import (DensityMatrix, Ket, Operator, destroy, embed,
                                eig_hermitian, fock, partial_trace, qeye,
                                sigma_minus, sigma_x, sigma_z, tensor)
from qcascade.spins import SpinNetworkSpec, build_spin_cascade


def test_embed_sigma_z_first_site():
    op = embed(sigma_z(), 0, (2, 2))
    assert np.array_equal(op.matrix, np.kron(sigma_z(), qeye(2)))


def test_embed_identity_is_identity():
    op = embed(qeye(2), 1, (2, 2))
    assert np.array_equal(op.matrix, qeye(4))


def test_embed_annihilation_second_site():
    a = destroy(3)
    op = embed(a, 1, (3, 3))
    assert np.array_equal(op.matrix, np.kron(qeye(3), a))


def test_embed_errors():
    with pytest.raises(ValueError):
        embed(destroy(3), 0, (2, 2))
    with pytest.raises(IndexError):
        embed(sigma_z(), 2, (2, 2))


def test_embed_multiplicative():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    dims = (2, 3, 2)
    lhs = embed(a @ b, 1, dims)
    rhs = embed(a, 1, dims) @ embed(b, 1, dims)
    assert np.abs(lhs.matrix - rhs.matrix).max() < 1e-12


def test_partial_trace_product_state():
    rho1 = np.diag([0.7, 0.3]).astype(complex)
    rho2 = np.array([[0.5, 0.2j], [-0.2j, 0.5]], dtype=complex)
    rho = DensityMatrix(np.kron(rho1, rho2), (2, 2))
    red = partial_trace(rho, {0})
    assert np.abs(red.matrix - rho1).max() < 1e-12
    red2 = partial_trace(rho, {1})
    assert np.abs(red2.matrix - rho2).max() < 1e-12


def test_partial_trace_singlet_marginal():
    s = np.zeros(4, dtype=complex)
    s[1], s[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    rho = Ket(s, (2, 2)).density()
    red = partial_trace(rho, {0})
    assert np.abs(red.matrix - qeye(2) / 2).max() < 1e-12


def test_partial_trace_preserves_trace_and_order():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = DensityMatrix.from_matrix(m @ m.conj().T, (2, 2, 2))
    red = partial_trace(rho, {0, 2})
    assert abs(np.trace(red.matrix) - 1.0) < 1e-12
    assert red.dims == (2, 2)


def test_partial_trace_kerr_dark_state_matches_single_cavity_me():
    # oracle: dense null space of the single-cavity generator at cutoff 30
    spec = KerrSpec(delta=0.0, kerr=0.5, omega=1.0, cutoff=30)
    psi = dark_state_fock(spec)
    red = partial_trace(psi.density(), {0})
    oracle = single_cavity_steady_state(spec)
    tdist = 0.5 * np.abs(np.linalg.eigvalsh(red.matrix - oracle.matrix)).sum()
    assert tdist < 1e-8


def test_partial_trace_errors():
    rho = DensityMatrix(np.kron(qeye(2) / 2, qeye(2) / 2), (2, 2))
    with pytest.raises(ValueError):
        partial_trace(rho, set())
    with pytest.raises(IndexError):
        partial_trace(rho, {5})


def test_eig_hermitian_sigma_z():
    res = eig_hermitian(Operator(sigma_z(), (2,)))
    assert np.allclose(res.values, [1.0, -1.0])
    assert not res.degenerate


def test_eig_hermitian_degenerate_flag():
    res = eig_hermitian(Operator(qeye(2) / 2, (2,)))
    assert np.allclose(res.values, [0.5, 0.5])
    assert res.degenerate


def test_eig_hermitian_driven_damped_spin():
    # oracle: direct 4x4 steady-state solve of the driven damped qubit
    h = Operator(1.0 * sigma_x(), (2,))
    c = Operator(sigma_minus(), (2,))
    rho0, unique = steady_state(liouvillian(h, [c]))
    assert unique
    res = eig_hermitian(Operator(rho0.matrix, (2,)))
    assert res.values.min() > 0
    assert not res.degenerate
    assert abs(res.values.sum() - 1.0) < 1e-10


def test_eig_hermitian_reconstruction():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    m = m + m.conj().T
    op = Operator(m, (6,))
    res = eig_hermitian(op)
    rebuilt = (res.vectors * res.values[None, :]) @ res.vectors.conj().T
    assert np.linalg.norm(rebuilt - m) < 1e-10 * np.linalg.norm(m)
    assert np.all(np.diff(res.values) <= 1e-12)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eig_hermitian(Operator(sigma_minus(), (2,)))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.3], [0.1, 0.5]]), (2,))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(qeye(2), (2,))  # trace 2


def test_ket_normalize_invariant():
    k = Ket(np.array([3.0, 4.0j]), (2,), normalized=False).normalize()
    assert abs(k.norm() - 1.0) < 1e-12


def test_tensor_and_fock():
    k = fock(2, 1)
    op = tensor(Operator(sigma_x(), (2,)), Operator(qeye(3), (3,)))
    assert op.dims == (2, 3)
    assert op.matrix.shape == (6, 6)
    assert abs((Operator(sigma_x(), (2,)) @ k).amplitudes[0] - 1.0) < 1e-15
