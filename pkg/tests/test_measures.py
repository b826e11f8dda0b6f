import numpy as np
import pytest

from qcascade.lindblad import build_liouvillian, steady_state
from qcascade.measures import (block_entropy, concurrence_2qubit, fidelity,
                               linear_entropy, purity)
from qcascade.operators import DensityMatrix, Ket, qeye
from qcascade.spins import (SpinNetworkSpec, build_spin_cascade,
                            dark_state_for_profile, pair_dark_state)


def singlet() -> Ket:
    v = np.zeros(4, dtype=complex)
    v[1], v[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    return Ket(v, (2, 2))


def random_state(rng, dims, rank):
    d = int(np.prod(dims))
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return DensityMatrix.from_matrix(a @ a.conj().T, dims)


def test_purity_pure_and_mixed():
    assert abs(purity(singlet().density()) - 1.0) < 1e-12
    rho = DensityMatrix(qeye(2) / 2, (2,))
    assert abs(purity(rho) - 0.5) < 1e-12


def test_purity_drops_with_onsite_decay():
    # oracle: dense steady-state solves with and without kappa0
    def solve(kappa0):
        spec = SpinNetworkSpec(2, 1.0, (0.2, -0.2), kappa0=kappa0)
        rho, _ = steady_state(build_liouvillian(build_spin_cascade(spec)))
        return purity(rho)

    ideal, lossy = solve(0.0), solve(0.0025)
    assert abs(ideal - 1.0) < 1e-10
    assert 0.0 < lossy < ideal


def test_block_entropy_product_state():
    psi = Ket(np.kron([1, 0], np.kron([0, 1], [1, 0])).astype(complex), (2, 2, 2))
    for cut in range(4):
        assert abs(block_entropy(psi, cut)) < 1e-12


def test_block_entropy_singlet_is_one_bit():
    assert abs(block_entropy(singlet(), 1) - 1.0) < 1e-12


def test_block_entropy_dimer_cut_closed_form():
    # oracle: 2x2 eigendecomposition of the single-spin marginal of |S_delta>
    omega, delta = 2.0, 1.0 / 3.0
    alpha = 2 * np.sqrt(2) * omega / (1j - 2 * delta)
    norm = 1 + abs(alpha) ** 2
    rho1 = np.array([[abs(alpha) ** 2 / 2, alpha / np.sqrt(2)],
                     [np.conj(alpha) / np.sqrt(2), 1 + abs(alpha) ** 2 / 2]],
                    dtype=complex) / norm
    ev = np.clip(np.linalg.eigvalsh(rho1), 1e-300, None)
    expected = float(-(ev * np.log2(ev)).sum())
    psi = dark_state_for_profile([delta, -delta] * 6, omega)
    assert abs(block_entropy(psi, 1) - expected) < 1e-10
    assert abs(block_entropy(psi, 3) - expected) < 1e-10


def test_block_entropy_complement_symmetry():
    # S(first n) equals the entropy of the complementary block; the oracle
    # diagonalizes the reduced state of the last N-n sites directly
    rng = np.random.default_rng(3)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    v /= np.linalg.norm(v)
    psi = Ket(v, (2, 2, 2, 2))
    for cut in range(1, 4):
        m = v.reshape(2 ** cut, 2 ** (4 - cut))
        rho_right = m.conj().T @ m
        ev = np.clip(np.linalg.eigvalsh(rho_right), 0.0, None)
        nz = ev[ev > 0]
        s_right = float(-(nz * np.log2(nz)).sum())
        assert abs(block_entropy(psi, cut) - s_right) < 1e-10
    assert block_entropy(psi, 0) == 0.0
    assert block_entropy(psi, 4) == 0.0


def test_block_entropy_reflection_symmetry_on_dark_states():
    # the circuit-constructed dark states satisfy S(n) = S(N-n)
    psi = dark_state_for_profile(np.array([0, 1, -1, 1, -1, 0]) / 3.0, 2.0)
    for cut in range(7):
        assert abs(block_entropy(psi, cut) - block_entropy(psi, 6 - cut)) < 1e-10


def test_block_entropy_requires_normalized_input():
    with pytest.raises(ValueError):
        block_entropy(Ket(np.array([2.0, 0, 0, 0]), (2, 2), normalized=False), 1)


def test_concurrence_trivial_cases():
    gg = np.zeros(4, dtype=complex)
    gg[3] = 1.0
    assert concurrence_2qubit(Ket(gg, (2, 2)).density()) == 0.0
    assert abs(concurrence_2qubit(singlet().density()) - 1.0) < 1e-12


def test_concurrence_pair_dark_state():
    # oracle: 2|c_gg c_ee - c_eg c_ge| on the explicit amplitudes
    psi = pair_dark_state(1.0, 0.0)
    v = psi.amplitudes
    expected = 2 * abs(v[3] * v[0] - v[1] * v[2])
    got = concurrence_2qubit(psi.density())
    assert abs(got - expected) < 1e-12
    assert abs(got - 8.0 / 9.0) < 1e-12  # |alpha|^2/(1+|alpha|^2) at Omega=gamma


def test_concurrence_local_unitary_invariance():
    rng = np.random.default_rng(4)
    for _ in range(20):
        rho = random_state(rng, (2, 2), rank=3)
        base = concurrence_2qubit(rho)
        u1, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        u2, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        u = np.kron(u1, u2)
        rotated = DensityMatrix(u @ rho.matrix @ u.conj().T, (2, 2))
        assert abs(concurrence_2qubit(rotated) - base) < 1e-10


def test_concurrence_rejects_wrong_dims():
    with pytest.raises(ValueError):
        concurrence_2qubit(DensityMatrix(qeye(4) / 4, (4,)))


def test_linear_entropy_iff_pure():
    assert abs(linear_entropy(singlet().density())) < 1e-12
    rng = np.random.default_rng(5)
    rho = random_state(rng, (2, 2), rank=4)
    assert linear_entropy(rho) > 1e-3
    assert abs((1.0 - purity(rho)) - linear_entropy(rho)) < 1e-12


def test_fidelity_identities():
    rng = np.random.default_rng(6)
    rho = random_state(rng, (2, 2), rank=2)
    assert abs(fidelity(rho, rho) - 1.0) < 1e-10
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    ka = Ket(a / np.linalg.norm(a), (2, 2))
    kb = Ket(b / np.linalg.norm(b), (2, 2))
    overlap = abs(np.vdot(ka.amplitudes, kb.amplitudes)) ** 2
    assert abs(fidelity(ka.density(), kb.density()) - overlap) < 1e-12


def test_fidelity_symmetry_and_range():
    rng = np.random.default_rng(7)
    rho = random_state(rng, (2,), rank=2)
    sig = random_state(rng, (2,), rank=1)
    f1, f2 = fidelity(rho, sig), fidelity(sig, rho)
    assert abs(f1 - f2) < 1e-10
    assert 0.0 <= f1 <= 1.0
