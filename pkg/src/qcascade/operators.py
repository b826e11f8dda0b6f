"""Tensor-product operator algebra for cascaded-network simulations.

Dense complex matrices tagged with a list of subsystem dimensions are the
canonical representation throughout the package.  Subsystem order is
waveguide order: index 0 is the most upstream node.  All containers are
treated as immutable after construction; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Operator",
    "Ket",
    "DensityMatrix",
    "EigResult",
    "embed",
    "partial_trace",
    "eig_hermitian",
    "tensor",
    "sigma_x",
    "sigma_y",
    "sigma_z",
    "sigma_minus",
    "sigma_plus",
    "qeye",
    "destroy",
    "number",
    "fock",
    "coherent",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
DEGENERACY_TOL = 1e-9


def _as_dims(dims: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 1 for d in out):
        raise ValueError(f"subsystem dims must be positive integers, got {dims}")
    return out


def total_dim(dims: Sequence[int]) -> int:
    return int(np.prod([int(d) for d in dims], dtype=np.int64))


@dataclass(frozen=True)
class Operator:
    """Complex square matrix on a tensor-product space.

    Parameters
    ----------
    matrix:
        Square complex matrix; side length must equal prod(dims).
    dims:
        Local Hilbert-space dimensions, upstream-to-downstream order.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        m = np.asarray(self.matrix, dtype=complex)
        d = total_dim(self.dims)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.dims)

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        scale = max(1.0, np.abs(self.matrix).max())
        return np.abs(self.matrix - self.matrix.conj().T).max() <= tol * scale

    def norm(self) -> float:
        """Frobenius norm (used for all residual scales)."""
        return float(np.linalg.norm(self.matrix))

    def _check_same_dims(self, other: "Operator"):
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check_same_dims(other)
            return Operator(self.matrix @ other.matrix, self.dims)
        if isinstance(other, Ket):
            if self.dims != other.dims:
                raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")
            return Ket(self.matrix @ other.amplitudes, self.dims, normalized=False)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_same_dims(other)
        return Operator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_same_dims(other)
        return Operator(self.matrix - other.matrix, self.dims)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex)):
            return Operator(self.matrix * scalar, self.dims)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(-self.matrix, self.dims)


@dataclass(frozen=True)
class Ket:
    """Pure-state vector over a tensor-product space."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]
    normalized: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        if v.size != total_dim(self.dims):
            raise ValueError(f"vector length {v.size} does not match dims {self.dims}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "Ket":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.amplitudes / n, self.dims)

    def overlap(self, other: "Ket") -> complex:
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityMatrix":
        v = self.amplitudes
        n2 = float(np.vdot(v, v).real)
        return DensityMatrix(np.outer(v, v.conj()) / n2, self.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace matrix over a tensor-product space.

    Hermiticity (1e-12) and unit trace (1e-10) are validated on
    construction; positivity is only checked by :meth:`check_psd` because
    it costs a full eigendecomposition.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_dims(self.dims))
        m = np.asarray(self.matrix, dtype=complex)
        d = total_dim(self.dims)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        scale = max(1.0, np.abs(m).max())
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL * scale:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} is not 1 within 1e-10")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m: np.ndarray, dims: Sequence[int]) -> "DensityMatrix":
        """Hermitize and trace-normalize raw solver output."""
        m = np.asarray(m, dtype=complex)
        m = (m + m.conj().T) / 2.0
        tr = np.trace(m).real
        if abs(tr) < 1e-300:
            raise ValueError("matrix has (numerically) zero trace")
        return cls(m / tr, dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check_psd(self, tol: float = PSD_TOL) -> bool:
        evals = np.linalg.eigvalsh(self.matrix)
        return bool(evals.min() >= -tol)

    def expect(self, op: Operator) -> complex:
        if self.dims != op.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {op.dims}")
        return complex(np.trace(op.matrix @ self.matrix))


class EigResult(NamedTuple):
    """Spectrum of a Hermitian operator, eigenvalues sorted descending."""

    values: np.ndarray
    vectors: np.ndarray
    degenerate: bool


def tensor(*ops: Operator) -> Operator:
    """Kronecker product of operators, left factor most upstream."""
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    m = ops[0].matrix
    dims: tuple[int, ...] = ops[0].dims
    for op in ops[1:]:
        m = np.kron(m, op.matrix)
        dims = dims + op.dims
    return Operator(m, dims)


def tensor_ket(*kets: Ket) -> Ket:
    v = kets[0].amplitudes
    dims: tuple[int, ...] = kets[0].dims
    for k in kets[1:]:
        v = np.kron(v, k.amplitudes)
        dims = dims + k.dims
    return Ket(v, dims)


def embed(local_op: np.ndarray, site: int, dims: Sequence[int]) -> Operator:
    """Embed a local operator at ``site``: I x ... x local_op x ... x I."""
    dims = _as_dims(dims)
    if not 0 <= site < len(dims):
        raise IndexError(f"site {site} out of range for {len(dims)} subsystems")
    local_op = np.asarray(local_op, dtype=complex)
    if local_op.shape != (dims[site], dims[site]):
        raise ValueError(
            f"local operator shape {local_op.shape} does not match dims[{site}]={dims[site]}"
        )
    left = total_dim(dims[:site]) if site > 0 else 1
    right = total_dim(dims[site + 1:]) if site + 1 < len(dims) else 1
    m = np.kron(np.kron(np.eye(left), local_op), np.eye(right))
    return Operator(m, dims)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` sites, in original relative order."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be non-empty")
    n = len(rho.dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"keep indices {keep} out of range for {n} subsystems")
    dims = rho.dims
    traced = [i for i in range(n) if i not in keep]
    # reshape to (d_0..d_{n-1}, d_0..d_{n-1}) and contract traced row/col axes
    t = rho.matrix.reshape(dims + dims)
    for count, site in enumerate(traced):
        ax = site - count  # axes shift as we contract
        t = np.trace(t, axis1=ax, axis2=ax + (n - count))
    d_keep = total_dim([dims[k] for k in keep])
    out = t.reshape(d_keep, d_keep)
    return DensityMatrix(out, tuple(dims[k] for k in keep))


def eig_hermitian(op: Operator, tol: float = 1e-10) -> EigResult:
    """Eigendecomposition of a Hermitian operator, eigenvalues descending.

    Near-degenerate pairs (gap below 1e-9 * max(1, ||M||)) set the
    ``degenerate`` flag; callers decide how to react.
    """
    m = op.matrix
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.abs(m - m.conj().T).max() > tol * scale:
        raise ValueError("operator is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh(m)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    gaps = np.abs(np.diff(vals))
    degenerate = bool(gaps.size and gaps.min() < DEGENERACY_TOL * scale)
    return EigResult(vals, vecs, degenerate)


# ---------------------------------------------------------------------------
# Common local operators and states
# ---------------------------------------------------------------------------

def sigma_x() -> np.ndarray:
    return np.array([[0, 1], [1, 0]], dtype=complex)


def sigma_y() -> np.ndarray:
    return np.array([[0, -1j], [1j, 0]], dtype=complex)


def sigma_z() -> np.ndarray:
    return np.array([[1, 0], [0, -1]], dtype=complex)


def sigma_minus() -> np.ndarray:
    """Lowering operator |g><e| in the (|e>, |g>) basis."""
    return np.array([[0, 0], [1, 0]], dtype=complex)


def sigma_plus() -> np.ndarray:
    return np.array([[0, 1], [0, 0]], dtype=complex)


def qeye(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def destroy(d: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on a d-level Fock space."""
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def number(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def fock(d: int, n: int, dims: Sequence[int] | None = None) -> Ket:
    if not 0 <= n < d:
        raise ValueError(f"Fock index {n} out of range for dimension {d}")
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return Ket(v, dims if dims is not None else (d,))


def coherent(d: int, beta: complex) -> Ket:
    """Truncated coherent state |beta>, renormalized on the truncation."""
    n = np.arange(d)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(n * np.log(complex(beta)) - 0.5 * log_fact) if beta != 0 else \
        np.concatenate(([1.0 + 0j], np.zeros(d - 1, dtype=complex)))
    amps = np.asarray(amps, dtype=complex)
    amps /= np.linalg.norm(amps)
    return Ket(amps, (d,))
