"""Frame changes that remove the drift term from an n-level ladder system.

Lab frame:        i psi' = (Delta + sum_j M_j(Omega_j)) psi
Driftless frame:    psi' = sum_j N_j(u_j) psi

For complex controls the map is the interaction picture followed by the gauge
``u_j = -i e^{-i w_j t} Omega_j``.  For resonant real controls
``Omega_j = u_j e^{i(w_j t + alpha_j)}`` a further constant diagonal phase
change ``e^{iL}`` turns every coupling into ``N_j(u_j)`` with real ``u_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

FRAMES = ("driftless_complex", "driftless_real", "lab")

__all__ = [
    "FRAMES",
    "LevelSystem",
    "PulseSchedule",
    "chain_coupling",
    "coupling_13",
    "to_driftless_complex",
    "to_lab_frame",
    "resonant_phase_choice",
    "wrap_phase",
    "interaction_state",
    "resonant_frame_state",
    "driftless_generators",
]


def wrap_phase(x):
    """Map angles into (-pi, pi]."""
    y = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
    return float(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class LevelSystem:
    energies: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.energies)
        if len(e) < 2:
            raise InvalidInputError("levels: need at least two energies")
        if not all(np.isfinite(e)):
            raise InvalidInputError("levels: energies must be finite")
        if any(b <= a for a, b in zip(e, e[1:])):
            raise InvalidInputError("levels: energies must be strictly increasing")
        object.__setattr__(self, "energies", e)

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def omegas(self) -> np.ndarray:
        """Transition frequencies ``E_{j+1} - E_j``."""
        return np.diff(self.energies)

    @property
    def drift(self) -> np.ndarray:
        return np.diag(np.asarray(self.energies, dtype=complex))


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Sampled controls on a time grid.

    ``controls[j, k]`` is channel ``j + 1`` at ``grid[k]``.  ``phases`` holds
    the resonant phases ``alpha_j`` for the real frame (and is informational
    otherwise).
    """

    frame: str
    grid: np.ndarray
    controls: np.ndarray
    phases: tuple | None = None

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise InvalidInputError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        grid = np.asarray(self.grid, dtype=float)
        ctrl = np.atleast_2d(np.asarray(self.controls, dtype=complex))
        if grid.ndim != 1 or grid.size < 2:
            raise InvalidInputError("grid: need at least two samples")
        if np.any(np.diff(grid) <= 0):
            raise InvalidInputError("grid: samples must be strictly increasing")
        if ctrl.shape[1] != grid.size:
            raise InvalidInputError(
                f"controls: expected {grid.size} samples per channel, got {ctrl.shape[1]}"
            )
        if self.frame == "driftless_real" and np.any(ctrl.imag != 0):
            raise InvalidInputError("controls: driftless_real schedules must be real")
        if self.phases is not None:
            object.__setattr__(self, "phases", tuple(float(a) for a in self.phases))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "controls", ctrl)

    @property
    def channels(self) -> int:
        return self.controls.shape[0]

    @property
    def horizon(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    def energy(self) -> float:
        """Trapezoid estimate of ``sum_j int |control_j|^2 dt``."""
        return float(np.trapezoid(np.sum(np.abs(self.controls) ** 2, axis=0), self.grid))

    def sample(self, t) -> np.ndarray:
        """Linearly interpolated controls at time(s) ``t``; shape ``(channels, ...)``."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.grid[0], self.grid[-1]
        eps = 1e-12 * max(1.0, abs(hi))
        if np.any(t < lo - eps) or np.any(t > hi + eps):
            raise InvalidInputError(f"time outside schedule range [{lo}, {hi}]")
        t = np.clip(t, lo, hi)
        return np.stack(
            [
                np.interp(t, self.grid, c.real) + 1j * np.interp(t, self.grid, c.imag)
                for c in self.controls
            ]
        )


def chain_coupling(kind: str, j: int, omega: complex, n: int) -> np.ndarray:
    """Nearest-neighbour coupling between levels ``j`` and ``j+1`` (1-based).

    ``M`` is Hermitian (``Omega`` above, ``Omega*`` below the diagonal); ``N``
    is skew-Hermitian (``Omega`` above, ``-Omega*`` below).
    """
    if kind not in ("M", "N"):
        raise InvalidInputError(f"kind must be 'M' or 'N', got {kind!r}")
    if not 1 <= j <= n - 1:
        raise InvalidInputError(f"channel index j={j} out of range 1..{n - 1}")
    m = np.zeros((n, n), dtype=complex)
    m[j - 1, j] = omega
    m[j, j - 1] = np.conj(omega) if kind == "M" else -np.conj(omega)
    return m


def coupling_13(omega: complex) -> np.ndarray:
    """``N_{1,3}``: skew-Hermitian coupling between levels 1 and 3 of a qutrit."""
    m = np.zeros((3, 3), dtype=complex)
    m[0, 2] = omega
    m[2, 0] = -np.conj(omega)
    return m


def _check_channels(s: PulseSchedule, sys: LevelSystem) -> None:
    if s.channels != sys.n - 1:
        raise InvalidInputError(
            f"schedule has {s.channels} channels, system with n={sys.n} needs {sys.n - 1}"
        )


def to_driftless_complex(lab: PulseSchedule, sys: LevelSystem) -> PulseSchedule:
    """Gauge-transform lab pulses to driftless complex controls."""
    if lab.frame != "lab":
        raise InvalidInputError(f"expected a lab-frame schedule, got {lab.frame}")
    _check_channels(lab, sys)
    rot = np.exp(-1j * np.outer(sys.omegas, lab.grid))
    return PulseSchedule("driftless_complex", lab.grid, -1j * rot * lab.controls)


def to_lab_frame(driftless: PulseSchedule, sys: LevelSystem) -> PulseSchedule:
    """Inverse frame map: driftless controls to physical (lab) pulses.

    Complex frame: ``Omega_j = i u_j e^{i w_j t}``.  Real frame:
    ``Omega_j = u_j e^{i(w_j t + alpha_j)}`` with the schedule's phases.
    """
    _check_channels(driftless, sys)
    w = sys.omegas
    if driftless.frame == "driftless_complex":
        rot = 1j * np.exp(1j * np.outer(w, driftless.grid))
        return PulseSchedule("lab", driftless.grid, rot * driftless.controls)
    if driftless.frame == "driftless_real":
        if driftless.phases is None or len(driftless.phases) != sys.n - 1:
            raise InvalidInputError("phases: real frame needs one alpha per channel")
        alpha = np.asarray(driftless.phases)
        rot = np.exp(1j * (np.outer(w, driftless.grid) + alpha[:, None]))
        return PulseSchedule(
            "lab", driftless.grid, rot * driftless.controls, phases=driftless.phases
        )
    raise InvalidInputError(f"expected a driftless schedule, got {driftless.frame}")


def resonant_phase_choice(alphas) -> np.ndarray:
    """Diagonal phases ``lambda_1..lambda_n`` making every resonant coupling ``N_j``.

    ``lambda_1 = 0`` and ``lambda_{j+1} = lambda_j + pi/2 - alpha_j``, wrapped
    into (-pi, pi].
    """
    a = np.asarray(alphas, dtype=float).ravel()
    lam = np.concatenate([[0.0], np.cumsum(np.pi / 2 - a)])
    return np.asarray(wrap_phase(lam), dtype=float)


def interaction_state(psi, sys: LevelSystem, t: float) -> np.ndarray:
    """Lab state to interaction picture: ``Lambda = e^{i Delta t} psi``."""
    return np.exp(1j * np.asarray(sys.energies) * t) * np.asarray(psi, dtype=complex)


def resonant_frame_state(psi, sys: LevelSystem, t: float, alphas) -> np.ndarray:
    """Lab state to the real driftless frame: ``phi = e^{-iL} e^{i Delta t} psi``."""
    lam = resonant_phase_choice(alphas)
    return np.exp(-1j * lam) * interaction_state(psi, sys, t)


def driftless_generators(n: int, complex_controls: bool = True) -> list:
    """Control vector fields ``N_j(1)`` (and ``N_j(i)``) as algebra elements."""
    from .liealg import Algebra, AlgebraElement

    alg = Algebra("su" if complex_controls else "so", n)
    out = [AlgebraElement(alg, chain_coupling("N", j, 1.0, n)) for j in range(1, n)]
    if complex_controls:
        out += [AlgebraElement(alg, chain_coupling("N", j, 1j, n)) for j in range(1, n)]
    return out
