"""Fixed-step RK4 propagation of the Schrodinger equation and its resolvent.

Lab frame:       i psi' = H(t) psi,  H = Delta + sum_j M_j(Omega_j(t))
Driftless frame:   psi' = sum_j N_j(u_j(t)) psi

Controls between schedule samples are linearly interpolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .driftfree import LevelSystem, PulseSchedule, chain_coupling
from .errors import AccuracyError, InvalidInputError

DEFAULT_STEP = 1e-4
NORM_BUDGET = 1e-6

__all__ = [
    "PropagationResult",
    "ResolventTrajectory",
    "as_state",
    "hamiltonian_at",
    "propagate_state",
    "propagate_resolvent",
]


@dataclass
class PropagationResult:
    grid: np.ndarray
    states: np.ndarray  # (K+1, n)
    populations: np.ndarray  # (K+1, n)
    energy: float
    energy_accum: np.ndarray  # (K+1,)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def norm_error(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))


@dataclass
class ResolventTrajectory:
    grid: np.ndarray
    g: np.ndarray  # (K+1, n, n)
    energy: float

    def apply(self, psi0) -> np.ndarray:
        return self.g @ np.asarray(psi0, dtype=complex)

    def unitarity_error(self) -> float:
        n = self.g.shape[-1]
        gh = np.conj(np.swapaxes(self.g, -1, -2))
        return float(np.max(np.linalg.norm(gh @ self.g - np.eye(n), axis=(1, 2))))


def as_state(psi, n: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Validate a normalised state vector."""
    v = np.asarray(psi, dtype=complex).ravel()
    if n is not None and v.size != n:
        raise InvalidInputError(f"state has {v.size} amplitudes, expected {n}")
    if not np.all(np.isfinite(v)) or abs(np.linalg.norm(v) - 1.0) > tol:
        raise InvalidInputError("state must be a finite unit vector")
    return v


def _check_frame(frame: str, pulses: PulseSchedule, sys: LevelSystem) -> None:
    if frame != pulses.frame:
        raise InvalidInputError(f"frame {frame!r} does not match schedule frame {pulses.frame!r}")
    if pulses.channels != sys.n - 1:
        raise InvalidInputError(
            f"schedule has {pulses.channels} channels, system with n={sys.n} needs {sys.n - 1}"
        )


def _generators(pulses: PulseSchedule, sys: LevelSystem, times) -> np.ndarray:
    """Right-hand-side matrices ``G(t)`` with ``psi' = G(t) psi``; shape (len(times), n, n)."""
    n = sys.n
    u = pulses.sample(times)
    out = np.zeros((np.size(times), n, n), dtype=complex)
    idx = np.arange(n - 1)
    if pulses.frame == "lab":
        out[:, idx, idx + 1] = u.T
        out[:, idx + 1, idx] = np.conj(u.T)
        out[:, np.arange(n), np.arange(n)] = np.asarray(sys.energies)
        out *= -1j
    else:
        out[:, idx, idx + 1] = u.T
        out[:, idx + 1, idx] = -np.conj(u.T)
    return out


def hamiltonian_at(frame: str, pulses: PulseSchedule, sys: LevelSystem, t: float) -> np.ndarray:
    """Hamiltonian at time ``t``.

    The lab frame returns the Hermitian ``Delta + sum M_j(Omega_j)``; the
    driftless frames return the skew-Hermitian generator ``sum N_j(u_j)``
    used without a factor of ``i``.
    """
    _check_frame(frame, pulses, sys)
    u = pulses.sample(float(t))
    kind = "M" if frame == "lab" else "N"
    h = sum(chain_coupling(kind, j + 1, u[j], sys.n) for j in range(sys.n - 1))
    if frame == "lab":
        h = h + sys.drift
    return h


def _rk4(gens: np.ndarray, y0: np.ndarray, h: float) -> np.ndarray:
    """RK4 over generators sampled at every half step; returns states at full steps."""
    steps = (gens.shape[0] - 1) // 2
    out = np.empty((steps + 1,) + y0.shape, dtype=complex)
    y = y0.astype(complex)
    out[0] = y
    hh = 0.5 * h
    for i in range(steps):
        g0, gm, g1 = gens[2 * i], gens[2 * i + 1], gens[2 * i + 2]
        k1 = g0 @ y
        k2 = gm @ (y + hh * k1)
        k3 = gm @ (y + hh * k2)
        k4 = g1 @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[i + 1] = y
    return out


def _time_grid(pulses: PulseSchedule, step: float):
    if not step > 0:
        raise InvalidInputError("step must be positive")
    t0, t1 = pulses.grid[0], pulses.grid[-1]
    steps = max(1, int(math.ceil((t1 - t0) / step - 1e-9)))
    h = (t1 - t0) / steps
    half = t0 + 0.5 * h * np.arange(2 * steps + 1)
    half[-1] = t1
    return half, h


def _energy_accum(pulses: PulseSchedule, times: np.ndarray) -> np.ndarray:
    w = np.sum(np.abs(pulses.controls) ** 2, axis=0)
    dt = np.diff(pulses.grid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (w[1:] + w[:-1]))])
    return np.interp(times, pulses.grid, cum)


def propagate_state(
    frame: str, pulses: PulseSchedule, sys: LevelSystem, psi0, step: float = DEFAULT_STEP
) -> PropagationResult:
    """Integrate the state from ``psi0`` across the schedule's time span."""
    _check_frame(frame, pulses, sys)
    psi0 = as_state(psi0, sys.n)
    half, h = _time_grid(pulses, step)
    states = _rk4(_generators(pulses, sys, half), psi0, h)
    grid = half[::2]
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    if drift > NORM_BUDGET:
        raise AccuracyError(f"norm drifted by {drift:.3e}; reduce the step")
    acc = _energy_accum(pulses, grid)
    return PropagationResult(
        grid=grid,
        states=states,
        populations=np.abs(states) ** 2,
        energy=pulses.energy(),
        energy_accum=acc,
    )


def propagate_resolvent(
    frame: str, pulses: PulseSchedule, sys: LevelSystem, step: float = DEFAULT_STEP
) -> ResolventTrajectory:
    """Integrate ``g' = G(t) g`` from the identity."""
    _check_frame(frame, pulses, sys)
    half, h = _time_grid(pulses, step)
    g = _rk4(_generators(pulses, sys, half), np.eye(sys.n, dtype=complex), h)
    traj = ResolventTrajectory(grid=half[::2], g=g, energy=pulses.energy())
    err = traj.unitarity_error()
    if err > NORM_BUDGET:
        raise AccuracyError(f"resolvent lost unitarity by {err:.3e}; reduce the step")
    return traj
