"""Two cascaded Kerr cavities: analytic dark state and derived quantities.

The cascaded pair

    H_A = Delta a^dag a + K a^dag a^dag a a + i Omega (a^dag - a),
    H_B = -Delta b^dag b - K b^dag b^dag b b + i Omega (b^dag - b),

with collective jump c = a + b has the pure steady state
|psi0> = |0>_+ |chi_0>_- in the symmetric/antisymmetric mode basis
c_pm = (a +- b)/sqrt(2).  The antisymmetric amplitudes obey

    alpha_n = sqrt(2/n) * eps/(x + n - 1) * alpha_{n-1},
    eps = Omega/(i K),  x = (i Delta + gamma/2)/(i K),

solved in closed form by alpha_n ~ (sqrt(2) eps)^n Gamma(x) /
(sqrt(n!) Gamma(x + n)), normalized by N = sqrt(0F2(x, x*; 2|eps|^2)).
Gamma ratios are evaluated as finite Pochhammer products throughout.
K = 0 is routed to the exact coherent-product limit |beta>|-beta>,
beta = Omega/(i Delta + gamma/2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .lindblad import SolverError, liouvillian, steady_state
from .operators import (DensityMatrix, Ket, Operator, coherent, destroy,
                        number, qeye)

__all__ = [
    "KerrSpec",
    "DarkStateCoefficients",
    "PoleError",
    "CutoffError",
    "hypergeom_0F2",
    "alpha_recursion",
    "alpha_closed_form",
    "select_cutoff",
    "dark_state_fock",
    "dark_state_residuals",
    "moments_cminus",
    "moments_ab",
    "single_cavity_steady_state",
    "entropy_map",
]

POLE_TOL = 1e-12
CUTOFF_CAP = 200
SHELL_WEIGHT_TOL = 1e-12


class PoleError(ValueError):
    """Recursion denominator x + n - 1 (or a Pochhammer factor) vanishes."""


class CutoffError(ValueError):
    """Requested Fock truncation cannot represent the state accurately."""


@dataclass(frozen=True)
class KerrSpec:
    """Parameters of the cascaded Kerr pair (rates in units of gamma)."""

    delta: float
    kerr: float
    omega: float
    gamma: float = 1.0
    cutoff: int = 30

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.cutoff < 2:
            raise ValueError("cutoff must be at least 2")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "kerr", float(self.kerr))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def eps(self) -> complex:
        if self.kerr == 0.0:
            raise PoleError("eps = Omega/(iK) undefined at K = 0; "
                            "use the coherent-limit path")
        return self.omega / (1j * self.kerr)

    @property
    def x(self) -> complex:
        if self.kerr == 0.0:
            raise PoleError("x undefined at K = 0; use the coherent-limit path")
        return (1j * self.delta + self.gamma / 2.0) / (1j * self.kerr)

    @property
    def beta(self) -> complex:
        """Coherent amplitude of the K -> 0 limit, Omega/(i Delta + gamma/2)."""
        return self.omega / (1j * self.delta + self.gamma / 2.0)


@dataclass(frozen=True)
class DarkStateCoefficients:
    """Normalized antisymmetric-mode amplitudes alpha_0..alpha_cutoff.

    ``norm`` is the normalization constant N = sqrt(0F2(x, x*; 2|eps|^2))
    of the raw series; ``tail_weight`` bounds sum_{n>cutoff} |alpha_n|^2.
    """

    alpha: np.ndarray
    norm: float
    tail_weight: float


def hypergeom_0F2(b1: complex, b2: complex, z: float,
                  rtol: float = 1e-14, max_terms: int = 10000) -> complex:
    """Generalized hypergeometric 0F2(;b1,b2;z) by term-ratio summation."""
    for b in (b1, b2):
        if abs(b - round(b.real)) < POLE_TOL and round(b.real) <= 0:
            raise PoleError(f"lower parameter {b} is a non-positive integer")
    total = term = 1.0 + 0.0j
    for k in range(max_terms):
        term = term * z / ((b1 + k) * (b2 + k) * (k + 1))
        total += term
        if abs(term) <= rtol * abs(total):
            # one more term as a guard against accidental small terms
            term = term * z / ((b1 + k + 1) * (b2 + k + 1) * (k + 2))
            total += term
            if abs(term) <= rtol * abs(total):
                return total
    raise PoleError(f"0F2 did not converge within {max_terms} terms")


def _raw_log2_alphas(spec: KerrSpec, n_max: int):
    """log2 magnitudes and phases of the unnormalized closed-form series."""
    eps, x = spec.eps, spec.x
    n = np.arange(n_max + 1)
    factors = x + np.arange(max(n_max, 1), dtype=float)  # x, x+1, ...
    if np.abs(factors).min() < POLE_TOL:
        bad = int(np.abs(factors).argmin())
        raise PoleError(f"recursion pole: x + {bad} = {factors[bad]:.3e}")
    se = np.sqrt(2.0) * eps
    if spec.omega == 0.0:
        log2_mag = np.full(n_max + 1, -np.inf)
        log2_mag[0] = 0.0
        return log2_mag, np.zeros(n_max + 1)
    log2_poch = np.concatenate(([0.0], np.cumsum(np.log2(np.abs(factors)))))
    arg_poch = np.concatenate(([0.0], np.cumsum(np.angle(factors))))
    log2_mag = n * np.log2(abs(se)) - 0.5 * gammaln(n + 1) / np.log(2.0) \
        - log2_poch
    phase = n * np.angle(se) - arg_poch
    return log2_mag, phase


def _extension_length(spec: KerrSpec, n_max: int) -> int:
    """Series length at which the amplitudes have decayed to negligibility."""
    n_ext = n_max
    while True:
        n_ext = int(1.5 * n_ext) + 50
        log2_mag, _ = _raw_log2_alphas(spec, n_ext)
        if log2_mag[-1] < log2_mag.max() - 60:  # weight ratio < 1e-36
            return n_ext
        if n_ext > 20 * CUTOFF_CAP:
            raise CutoffError("coefficient series does not decay; "
                              "parameters outside the representable range")


def _finish_series(mag: np.ndarray, phase_factors: np.ndarray, n_max: int):
    """Normalize an extended magnitude series and bound its tail weight."""
    norm = float(np.sqrt((mag ** 2).sum()))
    alpha = (mag / norm) * phase_factors
    r_last = mag[-1] / mag[-2] if mag[-2] > 0 else 0.0
    geo = (mag[-1] / norm) ** 2 * r_last ** 2 / max(1.0 - r_last ** 2, 0.5)
    tail = float((np.abs(alpha[n_max + 1:]) ** 2).sum() + geo)
    return alpha[: n_max + 1], norm, tail


def alpha_recursion(spec: KerrSpec, n_max: int | None = None) -> DarkStateCoefficients:
    """Antisymmetric-mode amplitudes from the term-by-term recursion,
    normalized over the numerically converged series."""
    if spec.kerr == 0.0:
        raise PoleError("recursion undefined at K = 0; use dark_state_fock, "
                        "which routes K = 0 to the coherent product")
    n_max = spec.cutoff if n_max is None else int(n_max)
    n_ext = _extension_length(spec, n_max)
    eps, x = spec.eps, spec.x
    raw = np.zeros(n_ext + 1, dtype=complex)
    raw[0] = 1.0
    for n in range(1, n_ext + 1):
        den = x + n - 1
        if abs(den) < POLE_TOL:
            raise PoleError(f"recursion pole at n = {n}: x + {n-1} = {den:.3e}")
        raw[n] = np.sqrt(2.0 / n) * eps / den * raw[n - 1]
    if not np.isfinite(raw).all():
        raise CutoffError("recursion overflowed; use alpha_closed_form")
    mag = np.abs(raw)
    phases = np.divide(raw, mag, out=np.ones_like(raw), where=mag > 0)
    alpha, norm, tail = _finish_series(mag, phases, n_max)
    return DarkStateCoefficients(alpha, norm, tail)


def alpha_closed_form(spec: KerrSpec, n_max: int | None = None) -> DarkStateCoefficients:
    """Amplitudes from (sqrt(2) eps)^n Gamma(x) / (sqrt(n!) Gamma(x+n)) / N,
    Gamma ratios as Pochhammer products (evaluated in log2 space)."""
    if spec.kerr == 0.0:
        raise PoleError("closed form undefined at K = 0")
    n_max = spec.cutoff if n_max is None else int(n_max)
    n_ext = _extension_length(spec, n_max)
    log2_mag, phase = _raw_log2_alphas(spec, n_ext)
    mag = np.exp2(log2_mag - log2_mag.max())
    alpha, norm_scaled, tail = _finish_series(mag, np.exp(1j * phase), n_max)
    norm = float(norm_scaled * 2.0 ** log2_mag.max())
    return DarkStateCoefficients(alpha, norm, tail)


def select_cutoff(spec: KerrSpec, shell_tol: float = SHELL_WEIGHT_TOL,
                  cap: int = CUTOFF_CAP) -> int:
    """Smallest per-mode cutoff whose top two shells plus tail carry less
    than ``shell_tol`` weight; raises CutoffError beyond ``cap``."""
    if spec.kerr == 0.0:
        # coherent product: Poisson tails in each mode with mean |beta|^2
        nbar = abs(spec.beta) ** 2
        for nc in range(2, cap + 1):
            k = np.arange(nc - 1, 4 * cap + 2)
            logw = k * np.log(max(nbar, 1e-300)) - gammaln(k + 1) - nbar
            if np.exp(logw).sum() < shell_tol:
                return nc
        raise CutoffError(f"no adequate cutoff below {cap} for |beta|^2 = {nbar:.3g}")
    probe = alpha_closed_form(spec, n_max=4 * cap)
    weights = np.abs(probe.alpha) ** 2
    cum_above = weights[::-1].cumsum()[::-1]  # sum_{k>=n} |alpha_k|^2
    for nc in range(2, cap + 1):
        if cum_above[nc - 1] + probe.tail_weight < shell_tol:
            return nc
    raise CutoffError(f"no adequate cutoff below {cap}; top-shell weight "
                      f"{cum_above[cap - 1]:.3e}")


def _binomial_shell(n_total: int) -> np.ndarray:
    """sqrt(binom(N, m)) / 2^(N/2) for m = 0..N, via log-space."""
    m = np.arange(n_total + 1)
    log_b = 0.5 * (gammaln(n_total + 1) - gammaln(m + 1) - gammaln(n_total - m + 1))
    return np.exp(log_b - 0.5 * n_total * np.log(2.0))


def dark_state_fock(spec: KerrSpec, tail_tol: float = 1e-10) -> Ket:
    """Two-mode dark state sum_nm B_nm |n>_A |m>_B at the spec's cutoff.

    B_nm = alpha_{n+m} (-1)^m 2^{-(n+m)/2} sqrt((n+m)!/(n! m!)); K = 0
    returns the coherent product |beta>|-beta> instead.
    """
    nc = spec.cutoff
    if spec.kerr == 0.0:
        b = spec.beta
        ka = coherent(nc + 1, b)
        kb = coherent(nc + 1, -b)
        amp = np.kron(ka.amplitudes, kb.amplitudes)
        return Ket(amp, (nc + 1, nc + 1))
    coeffs = alpha_recursion(spec, n_max=2 * nc)
    if coeffs.tail_weight > tail_tol:
        raise CutoffError(f"cutoff {nc} insufficient: tail weight "
                          f"{coeffs.tail_weight:.3e} > {tail_tol:.1e}")
    b_mat = np.zeros((nc + 1, nc + 1), dtype=complex)
    for n_total in range(2 * nc + 1):
        shell = _binomial_shell(n_total)
        signs = (-1.0) ** np.arange(n_total + 1)
        m = np.arange(max(0, n_total - nc), min(n_total, nc) + 1)
        b_mat[n_total - m, m] = coeffs.alpha[n_total] * signs[m] * shell[m]
    amp = b_mat.reshape(-1)
    return Ket(amp / np.linalg.norm(amp), (nc + 1, nc + 1))


def _two_mode_ops(spec: KerrSpec):
    nc = spec.cutoff
    d = nc + 1
    a_l = destroy(d)
    n_l = number(d)
    eye = qeye(d)
    a = np.kron(a_l, eye)
    b = np.kron(eye, a_l)
    h_a = spec.delta * n_l + spec.kerr * (n_l @ (n_l - eye)) \
        + 1j * spec.omega * (a_l.conj().T - a_l)
    h_b = -spec.delta * n_l - spec.kerr * (n_l @ (n_l - eye)) \
        + 1j * spec.omega * (a_l.conj().T - a_l)
    h_casc = np.kron(h_a, eye) + np.kron(eye, h_b) \
        - 0.5j * spec.gamma * (b.conj().T @ a - a.conj().T @ b)
    return a, b, h_casc


def dark_state_residuals(spec: KerrSpec) -> tuple:
    """(||(a+b)psi||, interior ||H_casc psi||) for the truncated dark state.

    The Hamiltonian residual is restricted to components with both mode
    indices <= cutoff-2, excluding truncation edge artifacts.
    """
    psi = dark_state_fock(spec)
    a, b, h_casc = _two_mode_ops(spec)
    v = psi.amplitudes
    res_dark = float(np.linalg.norm((a + b) @ v))
    hv = (h_casc @ v).reshape(spec.cutoff + 1, spec.cutoff + 1)
    interior = hv[: spec.cutoff - 1, : spec.cutoff - 1]
    return res_dark, float(np.linalg.norm(interior))


def _pochhammer(x: complex, n: int) -> complex:
    out = 1.0 + 0.0j
    for k in range(n):
        f = x + k
        if abs(f) < POLE_TOL:
            raise PoleError(f"Pochhammer pole: {x} + {k} = {f:.3e}")
        out *= f
    return out


def moments_cminus(n: int, m: int, spec: KerrSpec) -> complex:
    """Normally ordered antisymmetric-mode moment <(c_-^dag)^n (c_-)^m>."""
    if n < 0 or m < 0:
        raise ValueError("moment orders must be non-negative")
    if spec.kerr == 0.0:
        amp = np.sqrt(2.0) * spec.beta
        return np.conj(amp) ** n * amp ** m
    eps, x = spec.eps, spec.x
    z = 2.0 * abs(eps) ** 2
    ratio = hypergeom_0F2(np.conj(x) + n, x + m, z) / hypergeom_0F2(np.conj(x), x, z)
    return (2.0 ** ((n + m) / 2.0) * np.conj(eps) ** n * eps ** m
            / (_pochhammer(np.conj(x), n) * _pochhammer(x, m)) * ratio)


def moments_ab(n: int, k: int, l: int, m: int, spec: KerrSpec) -> complex:
    """Original-mode moment <(a^dag)^n (b^dag)^k (b)^l (a)^m> via the
    (-1)^(k+l) 2^(-(n+k+l+m)/2) mapping to c_- moments."""
    sign = (-1.0) ** (k + l)
    return sign / 2.0 ** ((n + k + l + m) / 2.0) * moments_cminus(n + k, l + m, spec)


def single_cavity_steady_state(spec: KerrSpec) -> DensityMatrix:
    """Dense steady state of the driven Kerr cavity master equation
    rho' = -i[H_A, rho] + gamma D[a] rho at the spec's cutoff."""
    nc = spec.cutoff
    d = nc + 1
    a_l = destroy(d)
    n_l = number(d)
    h_a = spec.delta * n_l + spec.kerr * (n_l @ (n_l - qeye(d))) \
        + 1j * spec.omega * (a_l.conj().T - a_l)
    lind = liouvillian(Operator(h_a, (d,)), [Operator(np.sqrt(spec.gamma) * a_l, (d,))])
    rho, _ = steady_state(lind)
    top = float(rho.matrix[nc, nc].real)
    if top > 1e-10:
        raise CutoffError(f"top-shell population {top:.3e} > 1e-10; "
                          "increase the cutoff")
    return rho


def entropy_map(deltas, omegas, kerr_strength: float, gamma: float = 1.0,
                shell_tol: float = SHELL_WEIGHT_TOL):
    """Normalized photon number and linear entropy over a (Delta, Omega) grid.

    Returns (n_norm, s_lin) arrays of shape (len(deltas), len(omegas));
    n_norm is <a^dag a> / (2 Omega/gamma)^2 (zero drive maps to 0) and
    S_lin = 1 - tr(rho_A^2) from the Schmidt values of the B matrix.
    Cutoffs are chosen automatically per grid point.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    n_norm = np.zeros((deltas.size, omegas.size))
    s_lin = np.zeros_like(n_norm)
    for i, dl in enumerate(deltas):
        for j, om in enumerate(omegas):
            if om == 0.0:
                continue  # vacuum: zero photons, zero entropy
            spec = KerrSpec(dl, kerr_strength, om, gamma, cutoff=2)
            nc = select_cutoff(spec, shell_tol=shell_tol)
            spec = replace(spec, cutoff=nc)
            psi = dark_state_fock(spec)
            b_mat = psi.amplitudes.reshape(nc + 1, nc + 1)
            n_a = float((np.arange(nc + 1)[:, None] * np.abs(b_mat) ** 2).sum())
            schmidt = np.linalg.svd(b_mat, compute_uv=False)
            n_norm[i, j] = n_a / (2.0 * om / gamma) ** 2
            s_lin[i, j] = max(0.0, 1.0 - float((schmidt ** 4).sum()))
    return n_norm, s_lin
