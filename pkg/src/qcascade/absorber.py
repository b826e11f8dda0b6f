"""Coherent-absorber construction and pure-steady-state diagnostics.

A cascaded pair (A, B) has a pure stationary state |psi> iff

    (I)  (c_A + c_B)|psi> = 0,
    (II) H_casc |psi> = lambda |psi>,

with H_casc = H_A + H_B - i(gamma/2)(c_A c_B^dag - c_A^dag c_B).  Given
(H_A, c_A, gamma) with a unique full-rank steady state rho_A^0, the
matched absorber (H_B, c_B) is built from the spectral decomposition
rho_A^0 = sum_k p_k |k><k| :

    c_B = - sum_{n,m} sqrt(p_n/p_m) <m|c_A|n> |n~><m~|,
    <n~|H_B|m~> = -1/2 ( sqrt(p_n/p_m) <m|H_eff|n>
                         + sqrt(p_m/p_n) <m|H_eff^dag|n> ),

where H_eff = H_A - i(gamma/2) c_A^dag c_A and |k~> = V|k> for an
arbitrary unitary V.  The joint dark state is the purification
|psi0> = sum_k sqrt(p_k) |k> x |k~>.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lindblad import liouvillian, steady_state
from .operators import (DensityMatrix, Ket, Operator, eig_hermitian, qeye)

__all__ = [
    "DarkStateReport",
    "AbsorberResult",
    "DegenerateSpectrumError",
    "SymmetryConditionError",
    "check_dark_state",
    "correlation_identity_check",
    "build_absorber",
    "negative_counterpart",
    "purification",
    "jump_eigenstate_residual",
]

SPECTRUM_FLOOR = 1e-10
DEGENERACY_TOL = 1e-9
SYMMETRY_TOL = 1e-8


class DegenerateSpectrumError(ValueError):
    """rho_A^0 spectrum is degenerate or rank-deficient beyond repair."""


class SymmetryConditionError(ValueError):
    """Negative-counterpart symmetry conditions violated above tolerance."""


@dataclass(frozen=True)
class DarkStateReport:
    """Quantitative verdict on conditions (I)-(III) for a candidate state."""

    residual_i: float         # ||(c_A + c_B)|psi>||
    residual_ii: float        # ||(H_casc - <H_casc>)|psi>||
    correlation: float        # C = <cA^dag cB + cA cB^dag> - 2 Re <cA^dag><cB>
    is_dark: bool
    tol: float

    def __post_init__(self):
        if self.residual_i < 0 or self.residual_ii < 0:
            raise ValueError("residuals must be non-negative")


@dataclass(frozen=True)
class AbsorberResult:
    """Constructed absorber (H_B, c_B), joint dark state and A spectrum."""

    h_b: Operator
    c_b: Operator
    psi0: Ket
    spectrum: np.ndarray      # retained p_k, descending
    v: np.ndarray             # unitary defining the |k~> basis
    discarded_weight: float   # total weight dropped below the spectrum floor


def _bipartite_ops(h_a, c_a, h_b, c_b, gamma):
    da, db = h_a.dim, h_b.dim
    ha = np.kron(h_a.matrix, qeye(db))
    hb = np.kron(qeye(da), h_b.matrix)
    ca = np.kron(c_a.matrix, qeye(db))
    cb = np.kron(qeye(da), c_b.matrix)
    h_casc = ha + hb - 0.5j * gamma * (ca @ cb.conj().T - ca.conj().T @ cb)
    return ca, cb, h_casc


def check_dark_state(h_a: Operator, c_a: Operator, h_b: Operator,
                     c_b: Operator, gamma: float, psi: Ket,
                     tol: float = 1e-8) -> DarkStateReport:
    """Evaluate the dark-state conditions for a candidate bipartite state."""
    if psi.dims != h_a.dims + h_b.dims:
        raise ValueError(
            f"state dims {psi.dims} do not match A|B split {h_a.dims}+{h_b.dims}")
    v = psi.normalize().amplitudes
    ca, cb, h_casc = _bipartite_ops(h_a, c_a, h_b, c_b, gamma)
    res_i = float(np.linalg.norm((ca + cb) @ v))
    lam = np.vdot(v, h_casc @ v)
    res_ii = float(np.linalg.norm(h_casc @ v - lam * v))
    cross = np.vdot(v, (ca.conj().T @ cb + ca @ cb.conj().T) @ v)
    corr = float(cross.real
                 - 2.0 * (np.vdot(v, ca @ v).conj() * np.vdot(v, cb @ v)).real)
    return DarkStateReport(res_i, res_ii, corr, res_i <= tol and res_ii <= tol, tol)


def correlation_identity_check(rho: DensityMatrix, c_a: Operator,
                               c_b: Operator) -> tuple:
    """Both sides of condition (III): the A-B cross correlation C and
    -2(<cA^dag cA> - |<cA>|^2); they coincide on genuine dark states."""
    if rho.dims != c_a.dims + c_b.dims:
        raise ValueError("state dims do not match the A|B split")
    da, db = c_a.dim, c_b.dim
    ca = np.kron(c_a.matrix, qeye(db))
    cb = np.kron(qeye(da), c_b.matrix)
    m = rho.matrix

    def ev(op):
        return np.trace(op @ m)

    lhs = float((ev(ca.conj().T @ cb) + ev(ca @ cb.conj().T)).real
                - 2.0 * (ev(ca.conj().T) * ev(cb)).real)
    rhs = float(-2.0 * (ev(ca.conj().T @ ca).real - abs(ev(ca)) ** 2))
    return lhs, rhs


def jump_eigenstate_residual(c_a: Operator, c_b: Operator, psi: Ket) -> tuple:
    """Candidate jump-operator eigenvalue <psi|c|psi> and its residual.

    Pure stationary states with (c_A+c_B)|psi> = lambda'|psi>, lambda' != 0,
    are reported through this diagnostic only; no absorber is constructed
    for them.
    """
    da, db = c_a.dim, c_b.dim
    c = np.kron(c_a.matrix, qeye(db)) + np.kron(qeye(da), c_b.matrix)
    v = psi.normalize().amplitudes
    lam = complex(np.vdot(v, c @ v))
    return lam, float(np.linalg.norm(c @ v - lam * v))


def _retained_spectrum(rho: DensityMatrix, floor: float):
    res = eig_hermitian(Operator(rho.matrix, rho.dims))
    p, u = res.values, res.vectors
    keep = p >= floor
    r = int(np.count_nonzero(keep))
    discarded = float(np.clip(p[~keep], 0.0, None).sum())
    if r < 2:
        raise DegenerateSpectrumError(
            f"steady-state spectrum has rank {r} above the floor {floor:.1e}; "
            "the absorber construction needs a positive spectrum of rank >= 2 "
            f"(spectrum: {np.array2string(p[:4], precision=3)} ...)")
    p_r = p[:r]
    gaps = np.abs(np.diff(p_r))
    if gaps.min() < DEGENERACY_TOL:
        bad = int(np.argmin(gaps))
        raise DegenerateSpectrumError(
            f"eigenvalues p_{bad}={p_r[bad]:.12e} and p_{bad+1}={p_r[bad+1]:.12e} "
            f"are degenerate within {DEGENERACY_TOL:.1e}; the eigenbasis is "
            "ambiguous and the construction aborts")
    if discarded > 0.0:
        warnings.warn(
            f"absorber built on rank-{r} support; discarded spectral weight "
            f"{discarded:.3e}", stacklevel=3)
    return p_r, u[:, :r], discarded


def build_absorber(h_a: Operator, c_a: Operator, gamma: float,
                   v: np.ndarray | None = None,
                   spectrum_floor: float = SPECTRUM_FLOOR) -> AbsorberResult:
    """Construct the matched coherent absorber for system (H_A, c_A, gamma).

    The steady state of A is solved internally; its eigenvalues below
    ``spectrum_floor`` are truncated (with a warning carrying the weight),
    and degenerate retained eigenvalues abort the construction.  ``v``
    fixes the |k~> basis on B and defaults to the identity.
    """
    if h_a.dims != c_a.dims:
        raise ValueError("H_A and c_A must share dims")
    d = h_a.dim
    if v is None:
        v = qeye(d)
    v = np.asarray(v, dtype=complex)
    if v.shape != (d, d) or np.abs(v @ v.conj().T - qeye(d)).max() > 1e-10:
        raise ValueError("v must be a unitary on the A Hilbert space")

    lind = liouvillian(h_a, [np.sqrt(gamma) * c_a])
    rho0, unique = steady_state(lind)
    if unique is False:
        raise DegenerateSpectrumError(
            "steady state of A is not unique; construction needs a unique rho_A^0")
    p, u_r, discarded = _retained_spectrum(rho0, spectrum_floor)
    r = p.size

    sqrt_p = np.sqrt(p)
    w = v @ u_r                                   # columns |k~>, d x r isometry
    h_eff = h_a.matrix - 0.5j * gamma * (c_a.matrix.conj().T @ c_a.matrix)
    c_t = u_r.conj().T @ c_a.matrix @ u_r         # <k|c_A|n>
    a_t = u_r.conj().T @ h_eff @ u_r              # <k|H_eff|n>

    ratio = sqrt_p[:, None] / sqrt_p[None, :]     # sqrt(p_n / p_m)
    c_b = -w @ (ratio * c_t.T) @ w.conj().T
    m_h = -0.5 * (ratio * a_t.T + a_t.conj() / ratio)
    h_b = w @ m_h @ w.conj().T

    amp = (u_r * sqrt_p[None, :]) @ w.T           # sum_k sqrt(p_k)|k><k~|^T
    psi0 = Ket(amp.reshape(-1), h_a.dims + h_a.dims, normalized=False).normalize()
    return AbsorberResult(Operator(h_b, h_a.dims), Operator(c_b, h_a.dims),
                          psi0, p, v, discarded)


def _gauge_symmetry_defect(mats: list, tol: float) -> float:
    """Worst asymmetry of the matrices in the best common eigenvector gauge.

    A matrix M is "gauge symmetric" if phases t_k (|t_k| = 1) exist with
    t_n M[k, n] = t_k M[n, k]; the phases encode the free eigenvector
    phases of rho_A^0 and must be shared by all matrices.  They are fixed
    along a spanning structure built from the largest elements and the
    constraint is then verified globally.
    """
    r = mats[0].shape[0]
    scale = max(1.0, *(np.abs(m).max() for m in mats))
    per_mat = np.stack([np.minimum(np.abs(m), np.abs(m.T)) for m in mats])
    strength = per_mat.max(axis=0)
    np.fill_diagonal(strength, 0.0)
    t = np.zeros(r, dtype=complex)
    t[0] = 1.0
    # greedy spanning assignment: always extend from the strongest edge
    for _ in range(r - 1):
        assigned = t != 0
        if assigned.all():
            break
        edges = strength * assigned[:, None] * (~assigned)[None, :]
        k, n = np.unravel_index(np.argmax(edges), edges.shape)
        if edges[k, n] <= 1e-8 * scale:
            t[np.argmin(assigned)] = 1.0  # seed the next disconnected component
            continue
        m = mats[int(per_mat[:, k, n].argmax())]
        ratio = m[n, k] / m[k, n]
        t[n] = t[k] * ratio / abs(ratio)
    defect = 0.0
    for m in mats:
        defect = max(defect, float(np.abs(t[None, :] * m - t[:, None] * m.T).max()))
    return defect


def negative_counterpart(h_a: Operator, c_a: Operator, v: np.ndarray,
                         gamma: float = 1.0, tol: float = SYMMETRY_TOL,
                         spectrum_floor: float = SPECTRUM_FLOOR) -> tuple:
    """Short-cut absorber (H_B, c_B) = (-V H_A V^dag, -V c_A V^dag).

    Valid only when the steady-state spectrum satisfies the symmetry
    conditions sqrt(p_n)<k|c_A|n> = sqrt(p_k)<n|c_A|k> (and the analogous
    H_eff condition) in a common eigenvector phase gauge; the gauge is
    reconstructed and a violation above ``tol`` raises
    :class:`SymmetryConditionError`.  Eigenvalues below ``spectrum_floor``
    are excluded from the check (they carry no steady-state weight).
    """
    if h_a.dims != c_a.dims:
        raise ValueError("H_A and c_A must share dims")
    d = h_a.dim
    v = np.asarray(v, dtype=complex)
    if v.shape != (d, d) or np.abs(v @ v.conj().T - qeye(d)).max() > 1e-10:
        raise ValueError("v must be a unitary on the A Hilbert space")
    lind = liouvillian(h_a, [np.sqrt(gamma) * c_a])
    rho0, unique = steady_state(lind)
    if unique is False:
        raise DegenerateSpectrumError("steady state of A is not unique")
    res = eig_hermitian(Operator(rho0.matrix, rho0.dims))
    keep = res.values >= spectrum_floor
    sqrt_p = np.sqrt(res.values[keep])
    u = res.vectors[:, keep]
    h_eff = h_a.matrix - 0.5j * gamma * (c_a.matrix.conj().T @ c_a.matrix)
    weighted = [sqrt_p[None, :] * (u.conj().T @ op @ u)   # sqrt(p_n) <k|op|n>
                for op in (c_a.matrix, h_eff)]
    defect = _gauge_symmetry_defect(weighted, tol)
    if defect > tol:
        raise SymmetryConditionError(
            f"symmetry conditions violated: gauge defect {defect:.3e} > {tol:.1e}")
    h_b = Operator(-v @ h_a.matrix @ v.conj().T, h_a.dims)
    c_b = Operator(-v @ c_a.matrix @ v.conj().T, c_a.dims)
    return h_b, c_b


def purification(rho: DensityMatrix, v: np.ndarray | None = None) -> Ket:
    """Purification |psi> = sum_k sqrt(p_k) |k> x V|k> on a doubled space."""
    d = rho.dim
    if v is None:
        v = qeye(d)
    v = np.asarray(v, dtype=complex)
    if v.shape != (d, d) or np.abs(v @ v.conj().T - qeye(d)).max() > 1e-10:
        raise ValueError("v must be a unitary matching the state dimension")
    res = eig_hermitian(Operator(rho.matrix, rho.dims))
    sqrt_p = np.sqrt(np.clip(res.values, 0.0, None))
    w = v @ res.vectors
    amp = (res.vectors * sqrt_p[None, :]) @ w.T
    return Ket(amp.reshape(-1), rho.dims + rho.dims, normalized=False).normalize()
