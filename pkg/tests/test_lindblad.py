import numpy as np
import pytest

from qcascade.lindblad import (CascadeSpec, NodeSpec, SolverError,
                               build_liouvillian, evolve, expectation,
                               liouvillian, output_intensity, spectral_gap,
                               steady_state)
from qcascade.measures import fidelity, purity
from qcascade.operators import (DensityMatrix, Ket, Operator, embed,
                                partial_trace, qeye, sigma_minus, sigma_x,
                                sigma_z)
from qcascade.spins import SpinNetworkSpec, build_spin_cascade, pair_dark_state

GROUND = np.array([0, 1], dtype=complex)


def decay_spec(gamma=1.0):
    return CascadeSpec((NodeSpec(np.zeros((2, 2)), sigma_minus()),), gamma)


def two_spin(omega, delta, **kw):
    return build_spin_cascade(SpinNetworkSpec(2, omega, (delta, -delta), **kw))


def eq1_sum_form(spec: CascadeSpec) -> np.ndarray:
    """Direct transcription of the generalized cascaded ME sum form."""
    d = int(np.prod(spec.dims))
    eye = np.eye(d, dtype=complex)
    cs = [op.matrix for op in spec.embedded_jumps()]
    g = spec.gamma

    def spre(a):
        return np.kron(eye, a)

    def spost(a):
        return np.kron(a.T, eye)

    total = np.zeros((d * d, d * d), dtype=complex)
    for i, node in enumerate(spec.nodes):
        h = embed(node.h, i, spec.dims).matrix
        total += -1j * (spre(h) - spost(h))
        cc = cs[i].conj().T @ cs[i]
        total += g * (np.kron(cs[i].conj(), cs[i]) - 0.5 * spre(cc) - 0.5 * spost(cc))
        for rate, op in node.channels:
            lo = embed(op, i, spec.dims).matrix
            ll = lo.conj().T @ lo
            total += rate * (np.kron(lo.conj(), lo) - 0.5 * spre(ll) - 0.5 * spost(ll))
    for j in range(spec.n_nodes):
        for i in range(j):
            t_ij = spec._cum_amplitude(i, j)
            cjd, ci = cs[j].conj().T, cs[i]
            cid, cj = cs[i].conj().T, cs[j]
            term = spre(cjd @ ci) - np.kron(cjd.T, ci)       # [cj^dag, ci rho]
            term += np.kron((cid @ cj).T, eye) - np.kron(cid.T, cj)  # [rho ci^dag, cj]
            total += -g * t_ij * term
    return total


def test_single_node_decay_steady_state():
    lind = build_liouvillian(decay_spec())
    rho, unique = steady_state(lind)
    assert unique
    target = np.outer(GROUND, GROUND.conj())
    assert np.abs(rho.matrix - target).max() < 1e-12


def test_dark_state_annihilated():
    casc = two_spin(1.0, 0.3)
    lind = build_liouvillian(casc)
    rho = pair_dark_state(1.0, 0.3).density()
    assert np.linalg.norm(lind.apply(rho.matrix)) < 1e-12


def test_lossless_matches_eq1_sum_form():
    spec = build_spin_cascade(SpinNetworkSpec(3, 0.7, (0.1, -0.4, 0.2)))
    assert np.abs(build_liouvillian(spec).dense() - eq1_sum_form(spec)).max() < 1e-12


def test_lossy_link_matches_scaled_eq1_form():
    spec = build_spin_cascade(
        SpinNetworkSpec(3, 0.7, (0.1, -0.4, 0.2), eta=(0.3, 0.6)))
    assert np.abs(build_liouvillian(spec).dense() - eq1_sum_form(spec)).max() < 1e-12


def test_full_loss_decouples_nodes():
    spec = two_spin(0.8, 0.2, eta=(1.0,))
    lind = build_liouvillian(spec)
    single = build_liouvillian(spec.head(1))
    node2 = CascadeSpec((spec.nodes[1],), spec.gamma)
    lind2 = build_liouvillian(node2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        combined = lind.apply(np.kron(a, b))
        split = np.kron(single.apply(a), b) + np.kron(a, lind2.apply(b))
        assert np.abs(combined - split).max() < 1e-12


def test_steady_state_two_spin_closed_form():
    for omega, delta in ((1.0, 0.0), (0.4, 0.3)):
        rho, unique = steady_state(build_liouvillian(two_spin(omega, delta)))
        assert unique
        target = pair_dark_state(omega, delta)
        assert fidelity(rho, target.density()) > 1 - 1e-10


def test_steady_state_six_spin_dimer_product():
    profile = (0.2, -0.2, 0.2, -0.2, 0.2, -0.2)
    spec = build_spin_cascade(SpinNetworkSpec(6, 1.0, profile))
    rho, unique = steady_state(build_liouvillian(spec))
    assert unique
    pair = pair_dark_state(1.0, 0.2).amplitudes
    product = Ket(np.kron(np.kron(pair, pair), pair), (2,) * 6)
    assert fidelity(rho, product.density()) > 1 - 1e-8


def test_steady_state_reports_non_uniqueness():
    # pure dephasing: every diagonal state is stationary
    lind = liouvillian(Operator(np.zeros((2, 2)), (2,)),
                       [Operator(sigma_z(), (2,))])
    _, unique = steady_state(lind)
    assert unique is False


def test_spectral_gap_decay():
    assert abs(spectral_gap(build_liouvillian(decay_spec())) - 0.5) < 1e-10


def test_spectral_gap_two_spin_regression():
    # frozen baseline from the dense 16x16 eigendecomposition
    gap = spectral_gap(build_liouvillian(two_spin(1.0, 0.0)))
    assert gap > 0
    assert abs(gap - 0.082347311813544) < 1e-9


def test_spectral_gap_permutation_invariance():
    # oracle: two independent eigendecompositions (Eq. 10 invariance)
    rng = np.random.default_rng(1)
    base = rng.uniform(-1, 1, size=4)
    permuted = base.copy()
    permuted[1], permuted[2] = permuted[2], permuted[1]
    gaps = []
    for prof in (base, permuted):
        spec = build_spin_cascade(SpinNetworkSpec(4, 0.9, tuple(prof)))
        gaps.append(spectral_gap(build_liouvillian(spec)))
    assert abs(gaps[0] - gaps[1]) < 1e-8


def test_evolve_identity_at_zero_time():
    lind = build_liouvillian(two_spin(1.0, 0.0))
    rho0 = pair_dark_state(1.0, 0.0).density()
    assert evolve(lind, rho0, 0.0) is rho0


def test_evolve_dark_state_stationary():
    lind = build_liouvillian(two_spin(1.0, 0.25))
    rho0 = pair_dark_state(1.0, 0.25).density()
    rho_t = evolve(lind, rho0, 7.0)
    assert np.abs(rho_t.matrix - rho0.matrix).max() < 1e-8


def test_evolve_relaxes_to_steady_state():
    lind = build_liouvillian(two_spin(1.0, 0.0))
    gg = np.zeros(4, dtype=complex)
    gg[3] = 1.0
    rho_t = evolve(lind, Ket(gg, (2, 2)).density(), 50.0)
    rho_ss, _ = steady_state(lind)
    tdist = 0.5 * np.abs(np.linalg.eigvalsh(rho_t.matrix - rho_ss.matrix)).sum()
    assert tdist < 1e-6


def test_expectation_and_output_intensity():
    rho_g = Ket(GROUND, (2,)).density()
    assert abs(expectation(Operator(sigma_z(), (2,)), rho_g) + 1.0) < 1e-12
    with pytest.raises(ValueError):
        expectation(Operator(qeye(4), (2, 2)), rho_g)

    casc = two_spin(1.0, 0.3)
    dark = pair_dark_state(1.0, 0.3).density()
    assert output_intensity(casc, dark) < 1e-10

    # a symmetric detuning profile violates the dark condition (bright)
    offset = build_spin_cascade(SpinNetworkSpec(2, 1.0, (0.4, 0.4)))
    rho_b, _ = steady_state(build_liouvillian(offset))
    assert output_intensity(offset, rho_b) > 1e-3


def test_trace_preservation_on_basis():
    spec = build_spin_cascade(
        SpinNetworkSpec(2, 0.9, (0.2, -0.2), kappa0=0.05, dephasing_rate=0.02,
                        eta=(0.3,)))
    assert build_liouvillian(spec).max_trace_defect() < 1e-10


def test_hermiticity_preservation():
    lind = build_liouvillian(two_spin(0.6, 0.1, kappa0=0.01))
    rng = np.random.default_rng(2)
    for _ in range(5):
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = m + m.conj().T
        out = lind.apply(m)
        assert np.abs(out - out.conj().T).max() < 1e-12


def test_upstream_autonomy():
    spec = build_spin_cascade(
        SpinNetworkSpec(3, 1.0, (0.3, -0.3, 0.5), kappa0=0.02, eta=(0.15, 0.0)))
    rho_full, _ = steady_state(build_liouvillian(spec))
    rho_up, _ = steady_state(build_liouvillian(spec.head(2)))
    marginal = partial_trace(rho_full, {0, 1})
    assert np.abs(marginal.matrix - rho_up.matrix).max() < 1e-8


def test_apply_matches_dense_realization():
    spec = build_spin_cascade(SpinNetworkSpec(2, 1.1, (0.2, -0.5), eta=(0.4,)))
    lind = build_liouvillian(spec)
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    vec = m.reshape(-1, order="F")
    assert np.abs(lind.dense() @ vec - lind.apply_vec(vec)).max() < 1e-12


def test_steady_state_residual_contract():
    lind = build_liouvillian(two_spin(2.0, 0.7, kappa0=0.1))
    rho, _ = steady_state(lind)
    assert np.linalg.norm(lind.apply(rho.matrix)) <= 1e-10 * lind.norm()


def test_spec_validation():
    with pytest.raises(ValueError):
        CascadeSpec((), 1.0)
    with pytest.raises(ValueError):
        CascadeSpec((NodeSpec(np.zeros((2, 2)), sigma_minus()),), -1.0)
    with pytest.raises(ValueError):
        NodeSpec(sigma_minus(), sigma_minus())  # non-Hermitian H
    with pytest.raises(ValueError):
        NodeSpec(np.zeros((2, 2)), sigma_minus(), ((-0.1, sigma_z()),))
    with pytest.raises(ValueError):
        build_spin_cascade(SpinNetworkSpec(2, 1.0, (0.0, 0.0), eta=(1.5,)))
