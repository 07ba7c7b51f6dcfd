"""Brute-force optimal-control search over piecewise-constant pulses.

Works in the driftless frame and never touches the closed-form geodesics
(except to build an optional warm start).  The objective is

    J(u) + mu * (1 - |c3(T)|^2),   J(u) = sum_k |u_k|^2 dt,

minimised by BFGS with central finite-difference gradients and an Armijo
backtracking line search, from several seeded random starts.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError
from .geodesic import OPTIMAL_TIME, closed_form_controls, normalize_problem

__all__ = [
    "OracleProblem",
    "OracleResult",
    "RunSummary",
    "ladder_propagators",
    "evaluate_controls",
    "optimize_controls",
    "geodesic_warm_start",
    "energy_lower_bound",
]


@dataclass(frozen=True)
class OracleProblem:
    problem: str = "general_complex"
    horizon: float = OPTIMAL_TIME
    segments: int = 40
    mu: float = 1e3
    seed: int = 0
    restarts: int = 8
    max_iter: int = 4000
    fd_step: float = 1e-6
    init_radius: float = 2.0
    target_infidelity: float = 1e-4
    psi0: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "problem", normalize_problem(self.problem))
        if self.segments < 2:
            raise InvalidInputError("segments: need at least 2")
        if not self.horizon > 0:
            raise InvalidInputError("horizon must be positive")
        if not self.mu > 0:
            raise InvalidInputError("mu must be positive")
        if self.restarts < 1 or self.max_iter < 1:
            raise InvalidInputError("restarts and max_iter must be positive")
        psi = np.asarray(self.psi0, dtype=complex)
        if psi.shape != (3,) or abs(np.linalg.norm(psi) - 1) > 1e-12:
            raise InvalidInputError("psi0 must be a unit 3-vector")

    @property
    def complex_controls(self) -> bool:
        return self.problem == "general_complex"

    @property
    def n_params(self) -> int:
        return self.segments * (4 if self.complex_controls else 2)


@dataclass
class RunSummary:
    J: float
    infidelity: float
    objective: float
    iterations: int
    converged: bool


@dataclass
class OracleResult:
    J: float
    infidelity: float
    controls: np.ndarray  # (segments, 2) complex
    converged: bool
    trace: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        """Relative energy gap to the geodesic optimum."""
        return self.J / OPTIMAL_TIME - 1.0


def energy_lower_bound(horizon: float) -> float:
    """Cauchy-Schwarz bound ``L^2 / T`` with ``L`` the optimal arclength."""
    return OPTIMAL_TIME**2 / horizon


def ladder_propagators(u: np.ndarray, tau: float) -> np.ndarray:
    """``exp(tau N(u))`` for ladder generators with controls ``u[..., 2]``.

    The generator has spectrum ``{0, +-i r}``, ``r^2 = |u1|^2 + |u2|^2``, so
    ``exp(tau G) = I + sin(r tau)/r G + (1 - cos(r tau))/r^2 G^2`` exactly.
    """
    u = np.asarray(u, dtype=complex)
    G = np.zeros(u.shape[:-1] + (3, 3), dtype=complex)
    G[..., 0, 1] = u[..., 0]
    G[..., 1, 0] = -np.conj(u[..., 0])
    G[..., 1, 2] = u[..., 1]
    G[..., 2, 1] = -np.conj(u[..., 1])
    r2 = np.abs(u[..., 0]) ** 2 + np.abs(u[..., 1]) ** 2
    r = np.sqrt(r2)
    x = r * tau
    small = x < 1e-4
    safe_r = np.where(small, 1.0, r)
    a = np.where(small, tau * (1 - x * x / 6), np.sin(x) / safe_r)
    b = np.where(small, tau * tau * (0.5 - x * x / 24), (1 - np.cos(x)) / (safe_r * safe_r))
    return np.eye(3) + a[..., None, None] * G + b[..., None, None] * (G @ G)


def _unpack(x: np.ndarray, p: OracleProblem) -> np.ndarray:
    if p.complex_controls:
        x = x.reshape(x.shape[:-1] + (p.segments, 4))
        return x[..., :2] + 1j * x[..., 2:]
    return x.reshape(x.shape[:-1] + (p.segments, 2)) + 0j


def _pack(u: np.ndarray, p: OracleProblem) -> np.ndarray:
    u = np.asarray(u, dtype=complex).reshape(p.segments, 2)
    if p.complex_controls:
        return np.concatenate([u.real, u.imag], axis=1).ravel()
    return u.real.ravel().copy()


def _terms(x: np.ndarray, p: OracleProblem):
    """Energy and infidelity for one or a batch of parameter vectors."""
    u = _unpack(x, p)
    dt = p.horizon / p.segments
    U = ladder_propagators(u, dt)
    psi = np.broadcast_to(np.asarray(p.psi0, dtype=complex), x.shape[:-1] + (3,))[..., None]
    for k in range(p.segments):
        psi = U[..., k, :, :] @ psi
    J = np.sum(np.abs(u) ** 2, axis=(-1, -2)) * dt
    # 1 - |c3|^2 written without cancellation
    infid = np.abs(psi[..., 0, 0]) ** 2 + np.abs(psi[..., 1, 0]) ** 2
    return J, infid


def _objective(x, p: OracleProblem):
    J, infid = _terms(x, p)
    return J + p.mu * infid


def _fd_gradient(x: np.ndarray, p: OracleProblem) -> np.ndarray:
    n = x.size
    h = p.fd_step
    probes = np.concatenate([x + h * np.eye(n), x - h * np.eye(n)])
    f = _objective(probes, p)
    return (f[:n] - f[n:]) / (2 * h)


def evaluate_controls(p: OracleProblem, controls) -> tuple[float, float]:
    """``(J, infidelity)`` of piecewise-constant controls, shape ``(segments, 2)``."""
    J, infid = _terms(_pack(controls, p), p)
    return float(J), float(infid)


def _bfgs(x: np.ndarray, p: OracleProblem, ftol: float = 1e-13, patience: int = 10):
    n = x.size
    f = float(_objective(x, p))
    g = _fd_gradient(x, p)
    Hinv = np.eye(n)
    trace = [f]
    quiet = 0
    it = 0
    for it in range(1, p.max_iter + 1):
        d = -Hinv @ g
        slope = g @ d
        if slope >= 0:
            Hinv = np.eye(n)
            d = -g
            slope = -(g @ g)
        step = 1.0
        while True:
            xn = x + step * d
            fn = float(_objective(xn, p))
            if fn <= f + 1e-4 * step * slope or step < 1e-14:
                break
            step *= 0.5
        gn = _fd_gradient(xn, p)
        s = xn - x
        y = gn - g
        sy = s @ y
        if sy > 1e-14:
            rho = 1.0 / sy
            Hy = Hinv @ y
            Hinv = Hinv - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * (y @ Hy) + rho) * np.outer(s, s)
        quiet = quiet + 1 if f - fn <= ftol * max(1.0, abs(f)) else 0
        x, f, g = xn, fn, gn
        trace.append(f)
        if quiet >= patience or not np.any(s):
            break
    return x, trace, it


def _single_run(p: OracleProblem, x0: np.ndarray):
    x, trace, iters = _bfgs(np.asarray(x0, dtype=float), p)
    J, infid = _terms(x, p)
    summary = RunSummary(
        J=float(J),
        infidelity=float(infid),
        objective=trace[-1],
        iterations=iters,
        converged=bool(infid < p.target_infidelity),
    )
    return summary, _unpack(x, p), trace


def _random_start(p: OracleProblem, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    shape = (p.segments, 2)
    if p.complex_controls:
        # uniform on the disc of radius init_radius
        rad = p.init_radius * np.sqrt(rng.uniform(size=shape))
        u = rad * np.exp(1j * rng.uniform(-np.pi, np.pi, size=shape))
    else:
        u = rng.uniform(-p.init_radius, p.init_radius, size=shape) + 0j
    return _pack(u, p)


def _restart_job(args):
    p, seed = args
    return _single_run(p, _random_start(p, seed))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("KP_PULSE_THREADS", "1")))
    except ValueError:
        return 1


def geodesic_warm_start(p: OracleProblem) -> np.ndarray:
    """Optimal controls sampled at segment midpoints, shape ``(segments, 2)``."""
    dt = p.horizon / p.segments
    mid = (np.arange(p.segments) + 0.5) * dt
    return closed_form_controls(p.problem, mid).T


def optimize_controls(p: OracleProblem, initial=None) -> OracleResult:
    """Minimise the penalised energy.

    With ``initial`` (controls of shape ``(segments, 2)``) a single run starts
    there; otherwise ``p.restarts`` seeded random starts are tried and the
    lowest-energy converged run wins (lowest objective if none converged).
    Per-restart seeds are spawned from ``p.seed`` by index, so the result does
    not depend on how restarts are scheduled.
    """
    if initial is not None:
        outcomes = [_single_run(p, _pack(initial, p))]
    else:
        seeds = np.random.SeedSequence(p.seed).spawn(p.restarts)
        jobs = [(p, s) for s in seeds]
        workers = min(_workers(), len(jobs))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                outcomes = list(ex.map(_restart_job, jobs))
        else:
            outcomes = [_restart_job(j) for j in jobs]

    converged = [o for o in outcomes if o[0].converged]
    if converged:
        best = min(converged, key=lambda o: o[0].J)
    else:
        best = min(outcomes, key=lambda o: o[0].objective)
    summary, controls, trace = best
    return OracleResult(
        J=summary.J,
        infidelity=summary.infidelity,
        controls=controls,
        converged=summary.converged,
        trace=trace,
        runs=[o[0] for o in outcomes],
    )
