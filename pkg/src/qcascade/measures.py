"""Entanglement and mixedness functionals: purity, block entropy,
two-qubit concurrence, linear entropy, fidelity.

Entropies are reported in bits (base-2 logarithms).
"""

from __future__ import annotations

import numpy as np

from .operators import DensityMatrix, Ket, partial_trace, sigma_y, total_dim

__all__ = [
    "purity",
    "linear_entropy",
    "block_entropy",
    "entropy_vn",
    "concurrence_2qubit",
    "fidelity",
]

# eigenvalues in [-1e-10, 0) are PSD round-off; clamp before taking logs
EIG_CLAMP = -1e-10


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2), in (0, 1]."""
    return float(np.trace(rho.matrix @ rho.matrix).real)


def linear_entropy(rho: DensityMatrix) -> float:
    """1 - tr(rho^2)."""
    return 1.0 - purity(rho)


def _entropy_from_probs(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    if p.min() < EIG_CLAMP:
        raise ValueError(f"eigenvalue {p.min():.3e} too negative for an entropy")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def entropy_vn(rho: DensityMatrix) -> float:
    """von Neumann entropy in bits."""
    return _entropy_from_probs(np.linalg.eigvalsh(rho.matrix))


def block_entropy(psi: Ket, first_n: int) -> float:
    """von Neumann entropy (bits) of the first ``first_n`` sites of a pure state.

    Computed from the Schmidt values of the cut, so no density matrix of
    the full system is ever formed.
    """
    n = len(psi.dims)
    if not 0 <= first_n <= n:
        raise ValueError(f"cut {first_n} out of range for {n} sites")
    if abs(psi.norm() - 1.0) > 1e-10:
        raise ValueError("block entropy needs a normalized state")
    if first_n in (0, n):
        return 0.0
    d_left = total_dim(psi.dims[:first_n])
    d_right = total_dim(psi.dims[first_n:])
    schmidt = np.linalg.svd(psi.amplitudes.reshape(d_left, d_right),
                            compute_uv=False)
    return _entropy_from_probs(schmidt ** 2)


def concurrence_2qubit(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state, in [0, 1].

    The lambda_i (square roots of the eigenvalues of rho rho-tilde) are
    computed as singular values of sqrt(rho) (sy x sy) conj(sqrt(rho)),
    which keeps the near-zero ones at machine precision instead of the
    sqrt(eps) noise of the plain eigenvalue route.
    """
    if rho.dims != (2, 2):
        raise ValueError(f"concurrence needs dims (2, 2), got {rho.dims}")
    yy = np.kron(sigma_y(), sigma_y())
    vals, vecs = np.linalg.eigh(rho.matrix)
    sqrt_rho = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    lam = np.linalg.svd(sqrt_rho @ yy @ sqrt_rho.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, in [0, 1].

    Evaluated as the squared trace norm of sqrt(sigma) sqrt(rho); the
    singular-value route keeps rank-deficient (pure) inputs at machine
    precision.
    """
    if rho.dims != sigma.dims:
        raise ValueError(f"dims mismatch: {rho.dims} vs {sigma.dims}")
    s = np.linalg.svd(_sqrtm_psd(sigma.matrix) @ _sqrtm_psd(rho.matrix),
                      compute_uv=False)
    return float(min(1.0, s.sum() ** 2))
