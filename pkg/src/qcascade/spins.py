"""Cascaded networks of driven two-level systems.

Node Hamiltonians are (delta_i/2) sigma_z + Omega_i sigma_x in the frame
rotating at the drive frequency, the waveguide jump is sigma_-, and all
rates are quoted in units of the waveguide rate gamma unless stated
otherwise.  The qubit basis is (|e>, |g>), so sigma_- = |g><e|.

Alternating detuning profiles (delta, -delta, ...) relax into a product of
two-spin dark states; permuted profiles are reached by a circuit of
nearest-neighbor partial-swap unitaries that exchange detunings while
leaving the cascaded Hamiltonian form invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lindblad import CascadeSpec, NodeSpec
from .operators import Ket, Operator, qeye, sigma_minus, sigma_x, sigma_z

__all__ = [
    "SpinNetworkSpec",
    "TranspositionCircuit",
    "build_spin_cascade",
    "pair_dark_state",
    "dimer_chain_state",
    "transposition_circuit",
    "apply_circuit",
    "pair_swap_unitary",
    "verify_form_invariance",
    "interpolate_profiles",
    "alternating_base",
    "dark_state_for_profile",
]

PAIRING_TOL = 1e-12


@dataclass(frozen=True)
class SpinNetworkSpec:
    """Parameters of an N-spin cascaded network (rates in units of gamma).

    ``kappa0`` is an onsite decay rate, ``dephasing_rate`` equals 1/(2 T2),
    and ``eta`` holds the photon-loss fraction of each of the N-1 links.
    """

    n: int
    omega: tuple
    delta: tuple
    gamma: float = 1.0
    kappa0: float = 0.0
    dephasing_rate: float = 0.0
    eta: tuple = None

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError("need at least one spin")
        omega = tuple(float(x) for x in np.broadcast_to(self.omega, n))
        delta = tuple(float(x) for x in np.broadcast_to(self.delta, n))
        eta = self.eta if self.eta is not None else (0.0,) * (n - 1)
        eta = tuple(float(x) for x in np.broadcast_to(eta, max(n - 1, 0)))
        if any(e < 0 or e > 1 for e in eta):
            raise ValueError("link loss fractions must lie in [0, 1]")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.kappa0 < 0 or self.dephasing_rate < 0:
            raise ValueError("imperfection rates must be non-negative")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "kappa0", float(self.kappa0))
        object.__setattr__(self, "dephasing_rate", float(self.dephasing_rate))
        object.__setattr__(self, "eta", eta)


def build_spin_cascade(spec: SpinNetworkSpec) -> CascadeSpec:
    """Assemble the CascadeSpec for a spin network, imperfections included."""
    nodes = []
    for i in range(spec.n):
        h = spec.delta[i] / 2.0 * sigma_z() + spec.omega[i] * sigma_x()
        channels = []
        if spec.kappa0 > 0:
            channels.append((spec.kappa0, sigma_minus()))
        if spec.dephasing_rate > 0:
            channels.append((spec.dephasing_rate, sigma_z()))
        nodes.append(NodeSpec(h, sigma_minus(), tuple(channels)))
    amps = tuple(np.sqrt(1.0 - e) for e in spec.eta)
    return CascadeSpec(tuple(nodes), spec.gamma, amps)


def pair_dark_state(omega: float, delta: float, gamma: float = 1.0) -> Ket:
    """Two-spin dark state (|gg> + alpha |S>)/sqrt(1+|alpha|^2),
    alpha = 2 sqrt(2) Omega / (i gamma - 2 delta)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    alpha = 2.0 * np.sqrt(2.0) * omega / (1j * gamma - 2.0 * delta)
    v = np.zeros(4, dtype=complex)
    v[3] = 1.0                      # |gg>
    v[1] = alpha / np.sqrt(2.0)     # |eg>
    v[2] = -alpha / np.sqrt(2.0)    # |ge>
    return Ket(v / np.linalg.norm(v), (2, 2))


def dimer_chain_state(profile, omega: float, gamma: float = 1.0) -> Ket:
    """Dark product state of an alternating profile delta_{2i} = -delta_{2i+1}."""
    profile = np.asarray(profile, dtype=float)
    n = profile.size
    if n % 2 != 0 or n == 0:
        raise ValueError("alternating profile needs an even number of spins")
    v = np.array([1.0 + 0j])
    for p in range(n // 2):
        d1, d2 = profile[2 * p], profile[2 * p + 1]
        if abs(d1 + d2) > PAIRING_TOL:
            raise ValueError(
                f"pair ({2*p}, {2*p+1}) violates delta, -delta pairing: {d1}, {d2}")
        v = np.kron(v, pair_dark_state(omega, d1, gamma).amplitudes)
    return Ket(v, (2,) * n)


@dataclass(frozen=True)
class TranspositionCircuit:
    """Ordered nearest-neighbor steps (site i, angle theta_i), applied
    left to right; each angle lies in (-pi/2, pi/2)."""

    steps: tuple

    def __post_init__(self):
        steps = tuple((int(i), float(t)) for i, t in self.steps)
        for _, theta in steps:
            if not -np.pi / 2 < theta < np.pi / 2:
                raise ValueError(f"angle {theta} outside (-pi/2, pi/2)")
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return len(self.steps)


def transposition_circuit(from_profile, to_profile,
                          gamma: float = 1.0) -> TranspositionCircuit:
    """Adjacent-transposition (bubble) circuit carrying one detuning profile
    into a permutation of it.

    Angles are evaluated on the evolving profile: swapping current values
    (d_i, d_{i+1}) uses theta = atan((d_{i+1} - d_i)/gamma).  Zero-angle
    steps (equal detunings) are identities and are omitted.
    """
    work = list(np.asarray(from_profile, dtype=float))
    target = list(np.asarray(to_profile, dtype=float))
    if len(work) != len(target):
        raise ValueError("profiles must have equal length")
    if np.max(np.abs(np.sort(work) - np.sort(target)), initial=0.0) > PAIRING_TOL:
        raise ValueError("target profile is not a permutation of the source")
    steps = []
    for i in range(len(target)):
        j = next(k for k in range(i, len(work))
                 if abs(work[k] - target[i]) <= PAIRING_TOL)
        for k in range(j - 1, i - 1, -1):
            theta = np.arctan((work[k + 1] - work[k]) / gamma)
            if theta != 0.0:
                steps.append((k, theta))
            work[k], work[k + 1] = work[k + 1], work[k]
    return TranspositionCircuit(tuple(steps))


def _singlet_projector() -> np.ndarray:
    s = np.zeros(4, dtype=complex)
    s[1], s[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    return np.outer(s, s.conj())


def pair_swap_unitary(theta: float) -> np.ndarray:
    """Two-site unitary exp[i (theta/2) sigma_i . sigma_{i+1}] as 4x4 matrix.

    sigma.sigma is +1 on the triplet and -3 on the singlet, so the
    exponential reduces to phases on the two projectors.
    """
    p_s = _singlet_projector()
    p_t = np.eye(4, dtype=complex) - p_s
    return np.exp(0.5j * theta) * p_t + np.exp(-1.5j * theta) * p_s


def apply_circuit(circuit: TranspositionCircuit, psi: Ket) -> Ket:
    """Apply the circuit's unitaries in order to a spin-chain state."""
    dims = psi.dims
    n = len(dims)
    if any(d != 2 for d in dims):
        raise ValueError("circuit application expects a chain of qubits")
    v = psi.amplitudes
    for site, theta in circuit.steps:
        if not 0 <= site < n - 1:
            raise IndexError(f"circuit site {site} out of range for {n} spins")
        u = pair_swap_unitary(theta)
        d_left = 2 ** site
        d_right = 2 ** (n - site - 2)
        v = v.reshape(d_left, 4, d_right)
        v = np.einsum("ab,ibj->iaj", u, v).reshape(-1)
    return Ket(v, dims)


def _spin_hamiltonian(profile, omega: float, gamma: float) -> Operator:
    spec = SpinNetworkSpec(len(profile), omega, tuple(profile), gamma)
    return build_spin_cascade(spec).hamiltonian()


def verify_form_invariance(profile, i: int, omega: float,
                           gamma: float = 1.0) -> float:
    """Frobenius norm of U_i H(delta) U_i^dag - H(P_{i,i+1} delta) with the
    swap angle theta_i = atan((delta_{i+1} - delta_i)/gamma)."""
    profile = np.asarray(profile, dtype=float)
    n = profile.size
    if n < 2 or not 0 <= i < n - 1:
        raise ValueError(f"adjacent pair index {i} invalid for {n} spins")
    h = _spin_hamiltonian(profile, omega, gamma).matrix
    theta = np.arctan((profile[i + 1] - profile[i]) / gamma)
    u4 = pair_swap_unitary(theta)
    u = np.kron(np.kron(qeye(2 ** i), u4), qeye(2 ** (n - i - 2)))
    permuted = profile.copy()
    permuted[i], permuted[i + 1] = permuted[i + 1], permuted[i]
    h_target = _spin_hamiltonian(permuted, omega, gamma).matrix
    return float(np.linalg.norm(u @ h @ u.conj().T - h_target))


def interpolate_profiles(profile_a, profile_b, s: float) -> np.ndarray:
    """Componentwise linear interpolation (1-s) A + s B."""
    a = np.asarray(profile_a, dtype=float)
    b = np.asarray(profile_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"profile length mismatch: {a.size} vs {b.size}")
    return (1.0 - s) * a + s * b


def alternating_base(profile) -> np.ndarray:
    """Deterministic alternating-pair base profile with the same multiset.

    Pairs (v, -v) are extracted in order of first appearance; raises if
    the multiset is not closed under negation.
    """
    remaining = list(np.asarray(profile, dtype=float))
    base = []
    while remaining:
        v = remaining.pop(0)
        idx = next((k for k, w in enumerate(remaining)
                    if abs(w + v) <= PAIRING_TOL), None)
        if idx is None:
            raise ValueError(
                f"profile has no alternating-pair base: no partner for {v}")
        w = remaining.pop(idx)
        base.extend([v, w])
    return np.asarray(base)


def dark_state_for_profile(profile, omega: float, gamma: float = 1.0) -> Ket:
    """Analytic pure steady state of a permuted-alternating detuning profile.

    Builds the dimer chain of the alternating base and transports it with
    the transposition circuit; no master-equation solve is involved.
    """
    profile = np.asarray(profile, dtype=float)
    base = alternating_base(profile)
    psi = dimer_chain_state(base, omega, gamma)
    circuit = transposition_circuit(base, profile, gamma)
    return apply_circuit(circuit, psi)
