"""Cascaded Liouvillians: construction, steady states, spectra, evolution.

The generator of a driven cascaded network is

    drho/dt = sum_i L_i rho - gamma * sum_{j>i} t_ij ([c_j^dag, c_i rho]
              + [rho c_i^dag, c_j]) + local imperfection Lindblad terms,

with L_i rho = -i[H_i, rho] + gamma D[c_i] rho and t_ij the cumulative
amplitude transmission of the links between nodes i and j.  Internally the
generator is always kept in explicit Lindblad form: the coherent exchange
part is folded into the cascaded Hamiltonian and the dissipation is carried
by a jump set consisting of the transmitted collective jump, one loss jump
per lossy link, and the local imperfection jumps.  The two forms are
algebraically identical (this is covered by tests) and the Lindblad form is
what Monte-Carlo unraveling needs.

Superoperators act on column-stacked density matrices: with vec stacking
columns, vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .operators import DensityMatrix, Ket, Operator, embed, total_dim

__all__ = [
    "NodeSpec",
    "CascadeSpec",
    "Superoperator",
    "SolverError",
    "liouvillian",
    "build_liouvillian",
    "steady_state",
    "spectral_gap",
    "evolve",
    "expectation",
    "output_intensity",
]

# Superoperator side length up to which the uniqueness verdict uses a full
# dense SVD; above it a dense-LU shift-inverted block iteration is used.
SVD_SIDE_LIMIT = 1024
# Largest total Hilbert-space dimension for which a dense superoperator
# realization is built at all; beyond it steady_state falls back to time
# integration and reports uniqueness as unknown.
DENSE_DIM_LIMIT = 100

UNIQUE_TOL = 1e-9
RESIDUAL_FACTOR = 1e-10


class SolverError(RuntimeError):
    """Steady-state or propagation solver failed to meet its contract."""


@dataclass(frozen=True)
class NodeSpec:
    """One network node: local Hamiltonian, waveguide jump, imperfections.

    ``h`` must be Hermitian; ``channels`` holds (rate, local operator)
    pairs for imperfection Lindblad terms, rates in the same inverse-time
    units as the waveguide rate.
    """

    h: np.ndarray
    c: np.ndarray
    channels: tuple = ()

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        c = np.asarray(self.c, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("node Hamiltonian must be a square matrix")
        if c.shape != h.shape:
            raise ValueError("node jump operator must match the Hamiltonian shape")
        scale = max(1.0, np.abs(h).max())
        if np.abs(h - h.conj().T).max() > 1e-12 * scale:
            raise ValueError("node Hamiltonian must be Hermitian")
        chans = []
        for rate, op in self.channels:
            if rate < 0:
                raise ValueError(f"imperfection rate {rate} must be non-negative")
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise ValueError("imperfection operator must match the node dimension")
            chans.append((float(rate), op))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "channels", tuple(chans))

    @property
    def dim(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class CascadeSpec:
    """Ordered cascaded network; node 0 is the most upstream.

    ``link_amplitudes`` are amplitude transmissions sqrt(1 - eta) of the
    N-1 waveguide links; all ones means a lossless waveguide.
    """

    nodes: tuple
    gamma: float
    link_amplitudes: tuple = None

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not nodes:
            raise ValueError("network needs at least one node")
        if self.gamma <= 0:
            raise ValueError("waveguide rate gamma must be positive")
        amps = self.link_amplitudes
        if amps is None:
            amps = (1.0,) * (len(nodes) - 1)
        amps = tuple(float(a) for a in amps)
        if len(amps) != len(nodes) - 1:
            raise ValueError("need one link amplitude per adjacent node pair")
        if any(a < 0 or a > 1 for a in amps):
            raise ValueError("link amplitudes must lie in [0, 1]")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "link_amplitudes", amps)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def dims(self) -> tuple:
        return tuple(node.dim for node in self.nodes)

    def _cum_amplitude(self, i: int, j: int) -> float:
        """Product of link amplitudes for links i .. j-1 (nodes i -> j)."""
        out = 1.0
        for k in range(i, j):
            out *= self.link_amplitudes[k]
        return out

    def embedded_jumps(self) -> list:
        return [embed(node.c, i, self.dims) for i, node in enumerate(self.nodes)]

    def hamiltonian(self) -> Operator:
        """Cascaded Hamiltonian including the waveguide-mediated exchange."""
        dims = self.dims
        d = total_dim(dims)
        h = np.zeros((d, d), dtype=complex)
        cs = self.embedded_jumps()
        for i, node in enumerate(self.nodes):
            h += embed(node.h, i, dims).matrix
        for j in range(self.n_nodes):
            for i in range(j):
                t_ij = self._cum_amplitude(i, j)
                if t_ij == 0.0:
                    continue
                cj, ci = cs[j].matrix, cs[i].matrix
                h += -0.5j * self.gamma * t_ij * (cj.conj().T @ ci - ci.conj().T @ cj)
        return Operator(h, dims)

    def output_jump(self) -> Operator:
        """Transmitted collective jump reaching the waveguide output."""
        n = self.n_nodes
        cs = self.embedded_jumps()
        out = sum(self._cum_amplitude(i, n - 1) * cs[i].matrix for i in range(n))
        return Operator(out, self.dims)

    def lindblad_jumps(self) -> list:
        """Full jump set (rates absorbed): transmitted collective jump,
        one loss jump per lossy link, local imperfection jumps."""
        n = self.n_nodes
        cs = self.embedded_jumps()
        root_gamma = np.sqrt(self.gamma)
        jumps = [root_gamma * self.output_jump()]
        for k in range(n - 1):
            eta = 1.0 - self.link_amplitudes[k] ** 2
            if eta <= 0.0:
                continue
            lost = sum(self._cum_amplitude(i, k) * cs[i].matrix for i in range(k + 1))
            jumps.append(Operator(np.sqrt(self.gamma * eta) * lost, self.dims))
        for i, node in enumerate(self.nodes):
            for rate, op in node.channels:
                if rate > 0.0:
                    jumps.append(np.sqrt(rate) * embed(op, i, self.dims))
        return jumps

    def head(self, n_nodes: int) -> "CascadeSpec":
        """Sub-network of the ``n_nodes`` most upstream nodes."""
        if not 1 <= n_nodes <= self.n_nodes:
            raise ValueError(f"cannot take {n_nodes} nodes from {self.n_nodes}")
        return CascadeSpec(self.nodes[:n_nodes], self.gamma,
                           self.link_amplitudes[: n_nodes - 1])


class Superoperator:
    """Lindblad generator with a matrix-free apply and a matrix realization.

    Immutable after construction; the sparse realization is cached lazily.
    """

    def __init__(self, hamiltonian: Operator, jumps: Sequence[Operator]):
        jumps = tuple(jumps)
        for j in jumps:
            if j.dims != hamiltonian.dims:
                raise ValueError("jump operator dims do not match the Hamiltonian")
        self.hamiltonian = hamiltonian
        self.jumps = jumps
        self.dims = hamiltonian.dims
        self.dim = hamiltonian.dim
        self._sum_ldl = sum(
            (j.matrix.conj().T @ j.matrix for j in jumps),
            np.zeros((self.dim, self.dim), dtype=complex),
        )
        self._sparse = None

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Matrix-free action L(rho) on a density matrix (as ndarray)."""
        h = self.hamiltonian.matrix
        out = -1j * (h @ rho - rho @ h)
        out -= 0.5 * (self._sum_ldl @ rho + rho @ self._sum_ldl)
        for j in self.jumps:
            m = j.matrix
            out += m @ rho @ m.conj().T
        return out

    def apply_vec(self, vec: np.ndarray) -> np.ndarray:
        rho = vec.reshape((self.dim, self.dim), order="F")
        return self.apply(rho).reshape(-1, order="F")

    def effective_hamiltonian(self) -> Operator:
        """Non-Hermitian H - (i/2) sum L^dag L used by trajectory unraveling."""
        return Operator(self.hamiltonian.matrix - 0.5j * self._sum_ldl, self.dims)

    def sparse(self) -> sp.csr_matrix:
        """Superoperator matrix on column-stacked density matrices."""
        if self._sparse is None:
            d = self.dim
            eye = sp.identity(d, format="csr", dtype=complex)
            h = sp.csr_matrix(self.hamiltonian.matrix)
            mat = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
            for j in self.jumps:
                m = sp.csr_matrix(j.matrix)
                mdm = (m.conj().T @ m).tocsr()
                mat = mat + sp.kron(m.conj(), m) \
                    - 0.5 * (sp.kron(eye, mdm) + sp.kron(mdm.T, eye))
            self._sparse = mat.tocsr()
        return self._sparse

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()

    def norm(self) -> float:
        """Frobenius norm of the matrix realization."""
        m = self.sparse()
        return float(np.sqrt((np.abs(m.data) ** 2).sum()))

    def max_trace_defect(self, n_samples: int = 0, seed: int = 0) -> float:
        """Largest |trace L(rho)| over a Hermitian basis (or random samples).

        Exhaustive over the d^2 matrix-unit Hermitian basis when
        ``n_samples`` is 0, otherwise over random Hermitian matrices.
        """
        d = self.dim
        worst = 0.0
        if n_samples == 0:
            for a in range(d):
                for b in range(a, d):
                    basis = np.zeros((d, d), dtype=complex)
                    if a == b:
                        basis[a, a] = 1.0
                    else:
                        basis[a, b] = basis[b, a] = 1.0
                    worst = max(worst, abs(np.trace(self.apply(basis))))
                    if a != b:
                        basis[a, b] = 1j
                        basis[b, a] = -1j
                        worst = max(worst, abs(np.trace(self.apply(basis))))
        else:
            rng = np.random.default_rng(seed)
            for _ in range(n_samples):
                m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                m = m + m.conj().T
                m /= np.linalg.norm(m)
                worst = max(worst, abs(np.trace(self.apply(m))))
        return worst


def liouvillian(hamiltonian: Operator, jumps: Sequence[Operator]) -> Superoperator:
    """Lindblad generator -i[H, .] + sum_mu D[L_mu] (rates absorbed in L_mu)."""
    return Superoperator(hamiltonian, jumps)


def build_liouvillian(spec: CascadeSpec) -> Superoperator:
    """Generator of the cascaded master equation for a network spec."""
    return Superoperator(spec.hamiltonian(), spec.lindblad_jumps())


def _state_from_vector(vec: np.ndarray, dims) -> DensityMatrix:
    d = total_dim(dims)
    rho = vec.reshape((d, d), order="F")
    return DensityMatrix.from_matrix(rho, dims)


def _steady_svd(L: Superoperator):
    mat = L.dense()
    _, s, vh = np.linalg.svd(mat)
    thresh = UNIQUE_TOL * max(1.0, s[0])
    null_count = int(np.count_nonzero(s < thresh))
    if null_count == 0:
        raise SolverError("no numerical null space found; generator not trace-preserving?")
    null_vecs = vh[len(s) - null_count:].conj()
    traces = [abs(np.trace(v.reshape((L.dim, L.dim), order="F"))) for v in null_vecs]
    best = null_vecs[int(np.argmax(traces))]
    if max(traces) < 1e-12:
        raise SolverError("null space contains no normalizable state")
    return _state_from_vector(best, L.dims), null_count == 1


def _steady_shift_invert(L: Superoperator, n_iter: int = 12, block: int = 2):
    mat = L.dense()
    n = mat.shape[0]
    scale = max(1.0, float(np.abs(mat).max()))
    shift = 1e-6 * scale  # Re(lambda) <= 0 for Lindblad spectra, so +shift
    mat_shifted = mat.copy()
    mat_shifted[np.arange(n), np.arange(n)] -= shift
    try:
        lu = la.lu_factor(mat_shifted)
    except la.LinAlgError as exc:  # pragma: no cover - pathological input
        raise SolverError(f"LU factorization failed: {exc}") from exc
    rng = np.random.default_rng(7)
    block_v = rng.normal(size=(n, block)) + 1j * rng.normal(size=(n, block))
    block_v[:, 0] = np.eye(L.dim, dtype=complex).reshape(-1, order="F")  # bias to trace
    for _ in range(n_iter):
        block_v = la.lu_solve(lu, block_v)
        block_v, _ = np.linalg.qr(block_v)
    small = block_v.conj().T @ (mat @ block_v)
    ritz, ritz_vecs = np.linalg.eig(small)
    order = np.argsort(np.abs(ritz))
    thresh = UNIQUE_TOL * max(1.0, scale)
    null_count = int(np.count_nonzero(np.abs(ritz) < thresh))
    if null_count == 0:
        raise SolverError("inverse iteration found no steady state")
    vec = block_v @ ritz_vecs[:, order[0]]
    return _state_from_vector(vec, L.dims), null_count == 1


def _steady_integrate(L: Superoperator, residual_tol: float = 1e-8,
                      max_time: float = 1e4):
    d = L.dim
    rho = np.eye(d, dtype=complex) / d
    rate_scale = max(1.0, float(np.abs(L.hamiltonian.matrix).max()),
                     float(np.abs(L._sum_ldl).max()))
    t, chunk = 0.0, 10.0 / rate_scale
    while t < max_time:
        sol = solve_ivp(lambda _t, y: L.apply_vec(y), (0.0, chunk),
                        rho.reshape(-1, order="F"), method="RK45",
                        rtol=1e-8, atol=1e-10)
        if not sol.success:
            raise SolverError(f"relaxation integration failed: {sol.message}")
        rho = sol.y[:, -1].reshape((d, d), order="F")
        rho = (rho + rho.conj().T) / 2
        rho /= np.trace(rho).real
        t += chunk
        chunk = min(2 * chunk, max_time)
        if np.linalg.norm(L.apply(rho)) < residual_tol:
            return DensityMatrix.from_matrix(rho, L.dims), None
    raise SolverError(f"no stationarity after t={max_time}: residual "
                      f"{np.linalg.norm(L.apply(rho)):.2e} > {residual_tol}")


def steady_state(L: Superoperator, residual_factor: float = RESIDUAL_FACTOR):
    """Stationary state of a trace-preserving generator.

    Returns (rho, unique) where ``unique`` is True/False from the
    numerical null-space dimension (threshold 1e-9), or None when only the
    matrix-free relaxation path was feasible.  A multi-dimensional null
    space is reported via unique=False, never silently resolved.

    Raises
    ------
    SolverError
        If no stationary state meets ||L(rho)|| <= residual_factor*||L||.
    """
    if L.dim <= DENSE_DIM_LIMIT:
        if L.dim ** 2 <= SVD_SIDE_LIMIT:
            rho, unique = _steady_svd(L)
        else:
            rho, unique = _steady_shift_invert(L)
        residual = np.linalg.norm(L.apply(rho.matrix))
        if residual > residual_factor * L.norm():
            raise SolverError(
                f"steady-state residual {residual:.3e} exceeds "
                f"{residual_factor:.1e} * ||L|| = {residual_factor * L.norm():.3e}")
        return rho, unique
    return _steady_integrate(L)


def spectral_gap(L: Superoperator) -> float:
    """Smallest nonzero decay rate min(-Re lambda) of the generator.

    Requires the dense realization (total dimension <= ~100); the full
    spectrum is computed, so cost grows as dim^6.
    """
    if L.dim > DENSE_DIM_LIMIT:
        raise SolverError(f"dense spectrum infeasible for dim {L.dim}")
    mat = L.dense()
    try:
        evals = la.eigvals(mat)
    except la.LinAlgError as exc:  # pragma: no cover
        raise SolverError(f"eigendecomposition failed: {exc}") from exc
    scale = max(1.0, float(np.abs(mat).max()))
    nonzero = evals[np.abs(evals) > UNIQUE_TOL * scale]
    if nonzero.size == 0:
        raise SolverError("generator has no nonzero eigenvalues")
    return float(np.min(-nonzero.real))


def evolve(L: Superoperator, rho0: DensityMatrix, t_final: float,
           rtol: float = 1e-8, atol: float = 1e-10,
           t_eval: Sequence[float] | None = None):
    """Propagate drho/dt = L(rho) to ``t_final`` by adaptive Runge-Kutta.

    With ``t_eval`` given, returns a list of DensityMatrix snapshots at
    those times; otherwise the final state only.  Trace and Hermiticity
    are verified to drift by less than 1e-8 and then re-enforced.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if rho0.dims != L.dims:
        raise ValueError("initial state dims do not match the generator")
    if t_final == 0 and t_eval is None:
        return rho0
    sol = solve_ivp(lambda _t, y: L.apply_vec(y), (0.0, float(t_final)),
                    rho0.matrix.reshape(-1, order="F"), method="RK45",
                    rtol=rtol, atol=atol, t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise SolverError(f"integration failed: {sol.message}")

    def _snap(vec):
        rho = vec.reshape((L.dim, L.dim), order="F")
        defect = max(abs(np.trace(rho) - 1.0),
                     np.abs(rho - rho.conj().T).max())
        if defect > 1e-8:
            raise SolverError(f"integration drift {defect:.2e} exceeds 1e-8")
        return DensityMatrix.from_matrix(rho, L.dims)

    if t_eval is None:
        return _snap(sol.y[:, -1])
    return [_snap(sol.y[:, k]) for k in range(sol.y.shape[1])]


def expectation(op: Operator, rho: DensityMatrix) -> complex:
    """trace(A rho)."""
    if op.dims != rho.dims:
        raise ValueError(f"dims mismatch: {op.dims} vs {rho.dims}")
    return complex(np.trace(op.matrix @ rho.matrix))


def output_intensity(spec: CascadeSpec, rho: DensityMatrix) -> float:
    """Waveguide output intensity <c^dag c> with the transmitted collective c."""
    c = spec.output_jump()
    if rho.dims != c.dims:
        raise ValueError("state dims do not match the network spec")
    val = np.trace(c.matrix.conj().T @ c.matrix @ rho.matrix)
    out = float(val.real)
    if out < -1e-10:
        warnings.warn(f"output intensity {out:.3e} below -1e-10; state not PSD?")
    return out
