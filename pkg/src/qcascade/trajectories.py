"""Monte-Carlo wavefunction unraveling of the cascaded master equation.

Between jumps the state follows d|psi>/dt = -i H_eff |psi| with
H_eff = H_casc - (i/2) sum_mu L_mu^dag L_mu; a jump fires when the squared
norm decays below a uniform draw, and the channel is chosen with
probability ~ ||L_mu psi||^2.  Waveguide losses are unraveled exactly like
the master equation builds them: a transmitted collective jump plus one
loss jump per lossy link (see :mod:`qcascade.lindblad`).

Randomness comes from the counter-based Philox generator with the
per-trajectory key seed + trajectory index, so ensembles are reproducible
bit-for-bit regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .lindblad import CascadeSpec, SolverError, build_liouvillian
from .operators import Ket, Operator

__all__ = ["TrajectoryRecord", "mcwf_trajectories", "ensemble_expectation"]


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic trajectory: seed, jump times, samples, final state."""

    seed: int
    jump_times: np.ndarray
    final_state: Ket
    sample_times: np.ndarray
    samples: np.ndarray  # shape (n_observables, n_sample_times), complex

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        if jt.size and np.any(np.diff(jt) <= 0):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "jump_times", jt)


def _one_trajectory(h_eff: np.ndarray, jump_mats: list, psi0: np.ndarray,
                    t_final: float, rng, sample_times: np.ndarray,
                    obs_mats: list, rtol: float, atol: float):
    def rhs(_t, y):
        return -1j * (h_eff @ y)

    def norm_event(_t, y):
        return float(np.vdot(y, y).real) - threshold

    norm_event.terminal = True
    norm_event.direction = -1

    psi = psi0.copy()
    t = 0.0
    threshold = rng.uniform()
    jump_times = []
    samples = np.empty((len(obs_mats), sample_times.size), dtype=complex)
    n_sampled = 0
    while True:
        sol = solve_ivp(rhs, (t, t_final), psi, method="DOP853",
                        events=norm_event, dense_output=True,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise SolverError(f"trajectory integration failed: {sol.message}")
        seg_end = sol.t[-1]
        while n_sampled < sample_times.size and sample_times[n_sampled] <= seg_end:
            y = sol.sol(sample_times[n_sampled])
            nrm2 = np.vdot(y, y).real
            for i, m in enumerate(obs_mats):
                samples[i, n_sampled] = np.vdot(y, m @ y) / nrm2
            n_sampled += 1
        if sol.status != 1:  # reached t_final without a jump
            psi = sol.y[:, -1]
            break
        t = float(sol.t_events[0][0])
        psi = sol.y_events[0][0]
        weights = np.array([np.vdot(m @ psi, m @ psi).real for m in jump_mats])
        total = weights.sum()
        if total <= 0.0:
            raise SolverError("norm collapsed with no available jump channel")
        pick = int(np.searchsorted(np.cumsum(weights) / total, rng.uniform()))
        psi = jump_mats[pick] @ psi
        psi = psi / np.linalg.norm(psi)
        jump_times.append(t)
        threshold = rng.uniform()
    psi = psi / np.linalg.norm(psi)
    return np.asarray(jump_times), psi, samples


def mcwf_trajectories(spec: CascadeSpec, psi0: Ket, t_final: float,
                      n_traj: int, seed: int,
                      observables: Sequence[Operator] = (),
                      n_samples: int = 51, rtol: float = 1e-8,
                      atol: float = 1e-10) -> list:
    """Unravel the cascaded master equation into ``n_traj`` trajectories.

    Observables are sampled on a uniform grid of ``n_samples`` times in
    [0, t_final] from the normalized stochastic state; the ensemble mean
    converges to the master-equation expectation with statistical error
    ~ 1/sqrt(n_traj).
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if psi0.dims != spec.dims:
        raise ValueError("initial state dims do not match the network")
    lind = build_liouvillian(spec)
    h_eff = lind.effective_hamiltonian().matrix
    jump_mats = [j.matrix for j in lind.jumps]
    obs_mats = []
    for op in observables:
        if op.dims != spec.dims:
            raise ValueError("observable dims do not match the network")
        obs_mats.append(op.matrix)
    sample_times = np.linspace(0.0, float(t_final), int(n_samples))
    records = []
    for k in range(int(n_traj)):
        rng = np.random.Generator(np.random.Philox(key=seed + k))
        jumps, psi, samples = _one_trajectory(
            h_eff, jump_mats, psi0.normalize().amplitudes, float(t_final),
            rng, sample_times, obs_mats, rtol, atol)
        records.append(TrajectoryRecord(seed + k, jumps, Ket(psi, spec.dims),
                                        sample_times, samples))
    return records


def ensemble_expectation(records: Sequence[TrajectoryRecord]):
    """Ensemble mean and standard error of the sampled observables.

    Returns (mean, stderr) arrays of shape (n_observables, n_times); the
    standard error is the trajectory-to-trajectory spread / sqrt(n_traj).
    """
    stack = np.stack([r.samples for r in records])  # (n_traj, n_obs, n_t)
    mean = stack.mean(axis=0)
    n = stack.shape[0]
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else \
        np.full_like(mean, np.inf, dtype=float)
    return mean, np.abs(stderr)
