"""Invariant suite behind ``kpcontrol verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geodesic import (
    OPTIMAL_TIME,
    Covector,
    Geodesic,
    closed_form_state,
    covector_family,
    first_target_time,
    geodesic_path,
    transversality_residual,
)
from .liealg import (
    SO3,
    SU3,
    algebra_basis,
    goh_span_dim,
    killing_trace_ratio,
    lie_closure_dim,
    so3_decomposition,
    su3_decomposition,
    verify_cartan,
)
from .matcore import is_special_unitary


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)
    killing_ratio_so3: float = float("nan")
    killing_ratio_su3: float = float("nan")

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "killing_ratio_so3": self.killing_ratio_so3,
            "killing_ratio_su3": self.killing_ratio_su3,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks
            ],
        }


def _cartan(report: VerifyReport) -> None:
    for tag, d in (("so3", so3_decomposition()), ("su3", su3_decomposition())):
        r = verify_cartan(d)
        report.checks.append(
            CheckResult(f"cartan[{tag}]", r.ok, f"max residual {r.max_residual:.2e}")
        )


def _goh(report: VerifyReport) -> None:
    for tag, d, want in (("so3", so3_decomposition(), 3), ("su3", su3_decomposition(), 8)):
        got = goh_span_dim(d.p_basis)
        report.checks.append(CheckResult(f"goh[{tag}]", got == want, f"span {got}, expected {want}"))
        got = lie_closure_dim(d.p_basis)
        report.checks.append(
            CheckResult(f"lie_rank[{tag}]", got == want, f"closure {got}, expected {want}")
        )


def _killing(report: VerifyReport) -> None:
    for tag, alg in (("so3", SO3), ("su3", SU3)):
        ratio, spread = killing_trace_ratio(algebra_basis(alg))
        setattr(report, f"killing_ratio_{tag}", ratio)
        report.checks.append(
            CheckResult(
                f"killing_ratio[{tag}]",
                spread <= 1e-10,
                f"Kil/Tr = {ratio:.12g}, spread {spread:.2e}",
            )
        )


def _unitarity(report: VerifyReport) -> None:
    times = np.linspace(0.0, 2 * OPTIMAL_TIME, 9)
    worst = 0.0
    ok = True
    for problem in ("real", "complex"):
        G = Geodesic(covector_family(problem, -1, 1))
        for g in geodesic_path(G, times):
            ok &= is_special_unitary(g, 1e-10)
            worst = max(worst, float(np.linalg.norm(g.conj().T @ g - np.eye(3))))
    report.checks.append(CheckResult("unitarity", bool(ok), f"max |g^H g - I| {worst:.2e}"))


def _family(rng) -> list:
    out = [covector_family("real", sp, sk) for sp in (1, -1) for sk in (1, -1)]
    for _ in range(6):
        th1, th3 = rng.uniform(-math.pi, math.pi, 2)
        sk = 1 if rng.random() < 0.5 else -1
        out.append(covector_family("complex", 1, sk, th1, th3))
    return out


def _transversality(report: VerifyReport, family) -> None:
    worst = max(float(np.max(np.abs(transversality_residual(A)))) for A in family)
    report.checks.append(CheckResult("transversality", worst <= 1e-10, f"max residual {worst:.2e}"))


def _equal_length(report: VerifyReport, family) -> None:
    worst = 0.0
    for A in family:
        t = first_target_time(Geodesic(A))
        worst = math.inf if t is None else max(worst, abs(t - OPTIMAL_TIME))
    report.checks.append(
        CheckResult("equal_length", worst <= 1e-8, f"max |t_reach - T| {worst:.2e}")
    )


def _phase_invariance(report: VerifyReport) -> None:
    times = np.linspace(0.0, OPTIMAL_TIME, 201)
    ref = np.abs(closed_form_state("complex", times)) ** 2
    worst = 0.0
    for th1 in np.linspace(-math.pi, math.pi, 7)[1:]:
        for th3 in np.linspace(-math.pi, math.pi, 7)[1:]:
            G = Geodesic(Covector("complex", a1=1.0, a3=1 / math.sqrt(3), theta1=th1, theta3=th3))
            pop = np.abs(geodesic_path(G, times)[:, :, 0]) ** 2
            worst = max(worst, float(np.max(np.abs(pop - ref.T))))
    report.checks.append(
        CheckResult("phase_invariance", worst <= 1e-10, f"max population spread {worst:.2e}")
    )


def run_verify(seed: int = 0) -> VerifyReport:
    """Deterministic invariant suite; ``seed`` fixes the sampled covectors."""
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    _cartan(report)
    _goh(report)
    _killing(report)
    _unitarity(report)
    family = _family(rng)
    _transversality(report, family)
    _equal_length(report, family)
    _phase_invariance(report)
    return report


