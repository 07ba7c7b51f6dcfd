"""Normal geodesics of the k+p problem on SO(3) and SU(3).

With ``A = A_p + A_k`` the initial covector (identified with an algebra
element through the trace form), normal extremals are

    g(t) = exp(-A_k t) exp(A t) g(0),        u(t) = exp(-A_k t) A_p exp(A_k t).

Transversality at the source forces ``a2 = 0`` (and ``a4 = a5 = 0`` in the
complex case); the target is first reached at the arclength time
``sqrt(3) pi / 2`` exactly when ``a3 = +-1/sqrt(3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .driftfree import (
    LevelSystem,
    PulseSchedule,
    chain_coupling,
    coupling_13,
    to_lab_frame,
    wrap_phase,
)
from .errors import InvalidInputError, UnsupportedProblemError
from .liealg import (
    SO3,
    SU3,
    AlgebraElement,
    killing,
    metric_inner,
    so3_decomposition,
    su3_decomposition,
)
from .matcore import expm, expm_path, is_special_unitary

SQRT3 = math.sqrt(3.0)
OPTIMAL_A3 = 1.0 / SQRT3
OPTIMAL_TIME = SQRT3 * math.pi / 2

# Cyclic permutation taking level 1 to level 3 (source circle to target circle).
G0 = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=complex)

PROBLEMS = ("real_resonant", "general_complex")

__all__ = [
    "SQRT3",
    "OPTIMAL_A3",
    "OPTIMAL_TIME",
    "G0",
    "Covector",
    "Geodesic",
    "normalize_problem",
    "source_tangent_basis",
    "transversality_residual",
    "covector_family",
    "geodesic_point",
    "geodesic_path",
    "target_population",
    "extract_controls",
    "closed_form_state",
    "closed_form_controls",
    "main_result_phases",
    "synthesize_pulses",
    "pulses_equivalent",
    "f_lemma",
    "f_lemma_dt",
    "first_reach_time",
    "source_member",
    "target_member",
    "first_target_time",
    "LemmaScan",
    "scan_lemma",
]


def normalize_problem(tag: str) -> str:
    """Accept ``real``/``complex`` shorthands for the two problem tags."""
    t = str(tag).strip().lower()
    if t in ("real", "real_resonant", "real-resonant"):
        return "real_resonant"
    if t in ("complex", "general_complex", "general-complex"):
        return "general_complex"
    raise InvalidInputError(f"problem must be 'real' or 'complex', got {tag!r}")


@dataclass(frozen=True)
class Covector:
    """Initial covector ``A = A_p + A_k`` in the coefficients used for both problems.

    Real case:    A_p = a1 N1(1) + a2 N2(1),          A_k = a3 N13(1)
    Complex case: A_p = N1(a1 e^{i th1}) + N2(a2 e^{i th2}),
                  A_k = a4 Z3 + a5 Z4 + N13(a3 e^{i th3})
    """

    problem: str
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "problem", normalize_problem(self.problem))
        for name in ("theta1", "theta2", "theta3"):
            object.__setattr__(self, name, wrap_phase(getattr(self, name)))
        if self.problem == "real_resonant":
            if self.a4 or self.a5 or self.theta1 or self.theta2 or self.theta3:
                raise InvalidInputError("real covectors only use a1, a2, a3")

    @property
    def algebra(self):
        return SO3 if self.problem == "real_resonant" else SU3

    @property
    def decomposition(self):
        return so3_decomposition() if self.problem == "real_resonant" else su3_decomposition()

    @property
    def A_p(self) -> np.ndarray:
        e1 = self.a1 * np.exp(1j * self.theta1)
        e2 = self.a2 * np.exp(1j * self.theta2)
        return chain_coupling("N", 1, e1, 3) + chain_coupling("N", 2, e2, 3)

    @property
    def A_k(self) -> np.ndarray:
        z3 = np.diag([1j, -1j, 0])
        z4 = np.diag([0, 1j, -1j])
        return self.a4 * z3 + self.a5 * z4 + coupling_13(self.a3 * np.exp(1j * self.theta3))

    @property
    def matrix(self) -> np.ndarray:
        return self.A_p + self.A_k

    def element(self) -> AlgebraElement:
        return AlgebraElement(self.algebra, self.matrix)

    def arclength_norm(self) -> float:
        """``<A_p, A_p>``; equal to 1 for arclength-parametrised geodesics."""
        ap = AlgebraElement(self.algebra, self.A_p)
        return metric_inner(ap, ap)


@dataclass(frozen=True, eq=False)
class Geodesic:
    covector: Covector
    g0: np.ndarray = field(default_factory=lambda: np.eye(3, dtype=complex))
    horizon: float = OPTIMAL_TIME

    def __post_init__(self):
        g0 = np.asarray(self.g0, dtype=complex)
        if g0.shape != (3, 3) or not is_special_unitary(g0, 1e-10):
            raise InvalidInputError("g0 must be a 3x3 special unitary matrix")
        if not self.horizon > 0:
            raise InvalidInputError("horizon must be positive")
        object.__setattr__(self, "g0", g0)


def _as_geodesic(g) -> Geodesic:
    return g if isinstance(g, Geodesic) else Geodesic(g)


def source_tangent_basis(problem: str) -> list[AlgebraElement]:
    """Basis of the source tangent space ``Ad_{g0} k`` at the identity."""
    d = so3_decomposition() if normalize_problem(problem) == "real_resonant" else su3_decomposition()
    g0inv = G0.conj().T
    return [AlgebraElement(d.algebra, G0 @ z.mat @ g0inv) for z in d.k_basis]


def transversality_residual(A: Covector) -> np.ndarray:
    """Killing pairings of ``A`` with a basis of the source tangent space.

    All zero iff the covector annihilates the source; the conjugation argument
    carries this to the target, so no separate target check is needed.
    """
    basis = A.decomposition.basis
    a = A.element()
    return np.array([killing(a, b, basis) for b in source_tangent_basis(A.problem)])


def covector_family(
    problem: str, sign_p: int = 1, sign_k: int = 1, theta1: float = 0.0, theta3: float = 0.0
) -> Covector:
    """Transversal, arclength-normalised covector reaching the target optimally.

    For the complex problem ``a1`` stays 1 and a negative ``sign_p`` is folded
    into ``theta1``.
    """
    problem = normalize_problem(problem)
    if sign_p not in (1, -1) or sign_k not in (1, -1):
        raise InvalidInputError("signs must be +1 or -1")
    a3 = sign_k * OPTIMAL_A3
    if problem == "real_resonant":
        return Covector(problem, a1=float(sign_p), a3=a3)
    th1 = theta1 + (0.0 if sign_p > 0 else math.pi)
    return Covector(problem, a1=1.0, a3=a3, theta1=th1, theta3=theta3)


def geodesic_point(G, t: float) -> np.ndarray:
    """Group element ``exp(-A_k t) exp(A t) g(0)``."""
    G = _as_geodesic(G)
    c = G.covector
    return expm(-c.A_k * t) @ expm(c.matrix * t) @ G.g0


def geodesic_path(G, times) -> np.ndarray:
    """Vectorised :func:`geodesic_point` over a time array, shape ``(..., 3, 3)``."""
    G = _as_geodesic(G)
    c = G.covector
    return expm_path(-c.A_k, times) @ expm_path(c.matrix, times) @ G.g0


def target_population(G, times) -> np.ndarray:
    """``|c3(t)|^2`` for the state ``g(t) (1, 0, 0)``."""
    g = geodesic_path(G, times)
    return np.abs(g[..., 2, 0]) ** 2


def extract_controls(G, t: float) -> tuple[complex, complex]:
    """Controls ``(u1, u2)`` read off ``g' g^{-1} = exp(-A_k t) A_p exp(A_k t)``."""
    G = _as_geodesic(G)
    c = G.covector
    mp = expm(-c.A_k * t) @ c.A_p @ expm(c.A_k * t)
    return complex(mp[0, 1]), complex(mp[1, 2])


def _effective_phases(problem, sign_p, sign_k, theta1, theta3) -> tuple[float, float]:
    # Every optimal branch is the complex family with a3 = +1/sqrt(3) at some phases.
    problem = normalize_problem(problem)
    if sign_p is None:
        sign_p = -1 if problem == "real_resonant" else 1
    if problem == "real_resonant":
        theta1 = theta3 = 0.0
    th1 = theta1 + (0.0 if sign_p > 0 else math.pi)
    th3 = theta3 + (0.0 if sign_k > 0 else math.pi)
    return th1, th3


def closed_form_state(
    problem: str, t, sign_p: int | None = None, sign_k: int = 1, theta1: float = 0.0, theta3: float = 0.0
) -> np.ndarray:
    """Wave function ``(c1, c2, c3)`` along the optimal branch; shape ``(3, ...)``.

    With ``sign_p=None`` the real problem takes the branch ``A^-``, whose state
    is ``(cos^3 s, sqrt(3)/2 sin 2s, -sin^3 s)`` with ``s = t/sqrt(3)``, and the
    complex problem takes ``sign_p=+1``, i.e. ``u1 = cos(s) e^{i theta1}``.
    """
    th1, th3 = _effective_phases(problem, sign_p, sign_k, theta1, theta3)
    s = np.asarray(t, dtype=float) / SQRT3
    c1 = np.cos(s) ** 3 + 0j
    c2 = -SQRT3 / 2 * np.sin(2 * s) * np.exp(-1j * th1)
    c3 = -np.sin(s) ** 3 * np.exp(-1j * th3)
    out = np.stack(np.broadcast_arrays(c1, c2, c3))
    if normalize_problem(problem) == "real_resonant":
        out = out.real + 0j
    return out


def closed_form_controls(
    problem: str, t, sign_p: int | None = None, sign_k: int = 1, theta1: float = 0.0, theta3: float = 0.0
) -> np.ndarray:
    """Optimal controls ``(u1, u2)``; shape ``(2, ...)``."""
    th1, th3 = _effective_phases(problem, sign_p, sign_k, theta1, theta3)
    s = np.asarray(t, dtype=float) / SQRT3
    u1 = np.cos(s) * np.exp(1j * th1)
    u2 = -np.sin(s) * np.exp(1j * (th3 - th1))
    out = np.stack(np.broadcast_arrays(u1, u2))
    if normalize_problem(problem) == "real_resonant":
        out = out.real + 0j
    return out


def main_result_phases(phi1: float, phi2: float) -> tuple[float, float]:
    """Covector phases ``(theta1, theta3)`` producing lab phases ``(phi1, phi2)``.

    Inverts ``phi1 = theta1 + pi/2`` and ``phi2 = theta3 - theta1 - pi/2``.
    """
    return wrap_phase(phi1 - math.pi / 2), wrap_phase(phi1 + phi2)


def synthesize_pulses(
    problem: str,
    sys: LevelSystem,
    samples: int = 32769,
    sign_p: int | None = None,
    sign_k: int = 1,
    theta1: float = 0.0,
    theta3: float = 0.0,
    alphas=(0.0, 0.0),
) -> PulseSchedule:
    """Sample the optimal controls on ``[0, sqrt(3) pi/2]`` and map them to the lab frame.

    ``samples`` is the number of grid points.  The real problem uses the
    resonant phases ``alphas``; the complex problem uses ``theta1``/``theta3``.
    """
    problem = normalize_problem(problem)
    if sys.n != 3:
        raise UnsupportedProblemError(
            f"optimal synthesis is only available for three levels, got n={sys.n}"
        )
    if samples < 2:
        raise InvalidInputError("samples: need at least 2")
    grid = np.linspace(0.0, OPTIMAL_TIME, int(samples))
    u = closed_form_controls(problem, grid, sign_p, sign_k, theta1, theta3)
    if problem == "real_resonant":
        drift = PulseSchedule("driftless_real", grid, u.real, phases=tuple(alphas))
    else:
        drift = PulseSchedule("driftless_complex", grid, u, phases=(theta1, theta3))
    return to_lab_frame(drift, sys)


def pulses_equivalent(a: PulseSchedule, b: PulseSchedule, tol: float = 1e-10) -> bool:
    """Equal up to a constant phase per channel, on a shared grid.

    Checks ``max_t ||a_j(t)| - |b_j(t)|| <= tol`` and that ``b_j / a_j`` has a
    constant argument wherever the amplitude exceeds ``sqrt(tol)``.
    """
    if a.grid.shape != b.grid.shape or np.max(np.abs(a.grid - b.grid)) > tol:
        return False
    if a.controls.shape != b.controls.shape:
        return False
    for x, y in zip(a.controls, b.controls):
        if np.max(np.abs(np.abs(x) - np.abs(y))) > tol:
            return False
        mask = np.abs(x) > math.sqrt(tol)
        if not np.any(mask):
            continue
        rel = y[mask] * np.conj(x[mask])
        ref = rel[np.argmax(np.abs(rel))]
        ref /= abs(ref)
        if np.max(np.abs(rel - np.abs(rel) * ref)) > math.sqrt(tol):
            return False
    return True


def f_lemma(a, t):
    """``cos(ta) sin(ts) a/s - cos(ts) sin(ta)`` with ``s = sqrt(1 + a^2)``.

    Its square is the target population along the real geodesic with
    ``a3 = a``; ``|f| <= 1`` everywhere.
    """
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    s = np.sqrt(1.0 + a * a)
    return np.cos(t * a) * np.sin(t * s) * a / s - np.cos(t * s) * np.sin(t * a)


def f_lemma_dt(a, t):
    """Time derivative of :func:`f_lemma`, ``sin(at) sin(st) / s``."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    s = np.sqrt(1.0 + a * a)
    return np.sin(a * t) * np.sin(s * t) / s


def _reach_time_lemma(a: float, t_max: float, tol: float) -> float | None:
    s = math.sqrt(1.0 + a * a)
    lam = abs(a) / s
    # |f| = 1 needs t s = k pi and 2 lam k odd.
    for k in range(1, int(math.floor(t_max * s / math.pi)) + 1):
        x = 2.0 * lam * k
        m = round(x)
        if m % 2 == 1 and abs(x - m) <= tol:
            return k * math.pi / s
    return None


def _reach_time_scan(a: float, t_max: float, step: float, tol: float) -> float | None:
    t = np.arange(0.0, t_max + step, step)
    f2 = f_lemma(a, t) ** 2
    # interior local maxima of f^2, bracketed by neighbours
    idx = np.nonzero((f2[1:-1] >= f2[:-2]) & (f2[1:-1] >= f2[2:]) & (f2[1:-1] > 0.99))[0] + 1
    for i in idx:
        lo, hi = t[i - 1], t[i + 1]
        slope = lambda x: f_lemma(a, x) * f_lemma_dt(a, x)
        if slope(lo) < 0 or slope(hi) > 0:
            continue
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0:
                lo = mid
            else:
                hi = mid
        tm = 0.5 * (lo + hi)
        if 1.0 - f_lemma(a, tm) ** 2 <= tol:
            return float(tm)
    return None


def first_reach_time(
    a: float, t_max: float = 50.0, method: str = "lemma", step: float = 1e-3
) -> float | None:
    """Smallest ``t > 0`` with ``|f_a(t)| = 1``, or ``None`` if not reached by ``t_max``.

    ``method="lemma"`` uses the arithmetic characterisation ``t s = k pi`` with
    ``2 k |a|/s`` odd.  ``method="scan"`` scans ``f_a^2`` on a grid of the
    given step and bisects the sign of its derivative around each candidate
    maximum.
    """
    a = float(a)
    if not math.isfinite(a):
        raise InvalidInputError("a must be finite")
    if method == "lemma":
        return _reach_time_lemma(a, t_max, 1e-9)
    if method == "scan":
        return _reach_time_scan(a, t_max, step, 1e-9)
    raise InvalidInputError(f"unknown method {method!r}")


@dataclass
class LemmaScan:
    """Grid scan of ``f_a(t)``: the maximum of ``|f|`` and near-extremal points.

    ``near`` rows are ``(a, t, f, t_lemma)`` where ``t_lemma = k pi / s`` is
    the closest lemma candidate to the grid point.
    """

    max_abs: float
    argmax: tuple
    near: np.ndarray


def scan_lemma(a_grid, t_grid, threshold: float = 1e-6) -> LemmaScan:
    """Evaluate ``f_a`` on ``a_grid x t_grid`` row by row and collect points with ``|f| > 1 - threshold``."""
    a_grid = np.asarray(a_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    best, arg = -1.0, (math.nan, math.nan)
    near = []
    for a in a_grid:
        f = f_lemma(a, t_grid)
        af = np.abs(f)
        i = int(np.argmax(af))
        if af[i] > best:
            best, arg = float(af[i]), (float(a), float(t_grid[i]))
        idx = np.nonzero(af > 1.0 - threshold)[0]
        if idx.size:
            s = math.sqrt(1.0 + a * a)
            tl = np.round(t_grid[idx] * s / math.pi) * math.pi / s
            near.append(np.column_stack([np.full(idx.size, a), t_grid[idx], f[idx], tl]))
    rows = np.vstack(near) if near else np.empty((0, 4))
    return LemmaScan(max_abs=best, argmax=arg, near=rows)


def source_member(h, problem: str, tol: float = 1e-8) -> bool:
    """Membership in the source subgroup S(U(1) x U(2)) or S(Z2 x O(2))."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (3, 3) or not is_special_unitary(h, tol):
        return False
    off = np.abs(np.concatenate([h[0, 1:], h[1:, 0]]))
    if np.any(off > tol):
        return False
    if normalize_problem(problem) == "real_resonant":
        return bool(np.max(np.abs(h.imag)) <= tol and abs(abs(h[0, 0].real) - 1) <= tol)
    return True


def target_member(g, problem: str, tol: float = 1e-8) -> bool:
    """Membership in the target coset ``g0 S``."""
    return source_member(G0.conj().T @ np.asarray(g, dtype=complex), problem, tol)


def _population_slope(G: Geodesic, t: float) -> float:
    # d|c3|^2/dt with c' = M_p(t) c
    c = geodesic_point(G, t)[:, 0]
    cov = G.covector
    mp = expm(-cov.A_k * t) @ cov.A_p @ expm(cov.A_k * t)
    return float(2.0 * (np.conj(c[2]) * (mp @ c)[2]).real)


def first_target_time(G, t_max: float = 10.0, step: float = 1e-3, tol: float = 1e-9) -> float | None:
    """First ``t > 0`` where the state ``g(t) e1`` reaches ``|c3|^2 = 1``.

    Scans ``|c3|^2`` on a grid, then bisects the sign of its exact time
    derivative around every candidate maximum.  A maximum counts as reaching
    the target when ``1 - |c3|^2 <= tol`` there.  Returns ``None`` if the
    target is not reached by ``t_max``.
    """
    G = _as_geodesic(G)
    t = np.arange(0.0, t_max + step, step)
    pop = target_population(G, t)
    cand = np.nonzero((pop[1:-1] >= pop[:-2]) & (pop[1:-1] >= pop[2:]) & (pop[1:-1] > 0.99))[0] + 1
    for i in cand:
        lo, hi = float(t[i - 1]), float(t[i + 1])
        if _population_slope(G, lo) < 0 or _population_slope(G, hi) > 0:
            continue
        while hi - lo > 1e-13:
            mid = 0.5 * (lo + hi)
            if _population_slope(G, mid) > 0:
                lo = mid
            else:
                hi = mid
        tm = 0.5 * (lo + hi)
        if 1.0 - target_population(G, tm) <= tol:
            return tm
    return None
