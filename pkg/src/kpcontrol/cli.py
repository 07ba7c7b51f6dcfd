"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checks import run_verify
from .driftfree import PulseSchedule, to_driftless_complex
from .errors import InvalidInputError, UnsupportedProblemError
from .formats import (
    ConfigError,
    RunConfig,
    fmt,
    load_config,
    parse_levels,
    read_pulses,
    write_pulses,
    write_rows,
    write_trajectory,
)
from .geodesic import OPTIMAL_TIME, closed_form_controls, f_lemma, scan_lemma, synthesize_pulses
from .oracle import OracleProblem, geodesic_warm_start, optimize_controls
from .propagate import propagate_state

SWEEP_PARAMS = ("theta1", "theta3", "alpha1", "alpha2", "step", "samples")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("KP_PULSE_THREADS", "1")))
    except ValueError:
        return 1


def _config(args) -> RunConfig:
    """Build a RunConfig from ``--config``/``--levels`` plus explicit flags."""
    overrides = {k: getattr(args, k, None) for k in ("problem", "theta1", "theta3", "alpha1", "alpha2", "step", "samples")}
    levels = getattr(args, "levels", None)
    path = getattr(args, "config", None)
    if levels is not None and Path(levels).suffix == ".json":
        path = levels
        levels = None
    if levels is not None:
        overrides["levels"] = parse_levels(levels)
    if path is not None:
        return load_config(path, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _schedule(cfg: RunConfig, sign_p: int, sign_k: int) -> PulseSchedule:
    return synthesize_pulses(
        cfg.problem,
        cfg.system,
        samples=cfg.samples,
        sign_p=sign_p,
        sign_k=sign_k,
        theta1=cfg.theta1,
        theta3=cfg.theta3,
        alphas=(cfg.alpha1, cfg.alpha2),
    )


def _propagation_frame(s: PulseSchedule) -> str:
    return s.frame


def _parse_psi(text: str) -> np.ndarray:
    try:
        return np.array([complex(x.replace(" ", "")) for x in text.split(",")])
    except ValueError:
        raise ConfigError("psi0", f"cannot parse {text!r}") from None


def cmd_verify(args) -> int:
    report = run_verify(seed=args.seed)
    for c in report.checks:
        print(c.line())
    print(f"killing/trace ratio: so3 {fmt(report.killing_ratio_so3)}, su3 {fmt(report.killing_ratio_su3)}")
    if args.report:
        Path(args.report).write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    return 0 if report.ok else 1


def cmd_synthesize(args) -> int:
    cfg = _config(args)
    lab = _schedule(cfg, args.sign_p, args.sign_k)
    if args.frame == "lab":
        out = lab
    elif cfg.problem == "real":
        u = closed_form_controls("real", lab.grid, args.sign_p, args.sign_k).real
        out = PulseSchedule("driftless_real", lab.grid, u, phases=(cfg.alpha1, cfg.alpha2))
    else:
        out = to_driftless_complex(lab, cfg.system)
    write_pulses(args.out, out)
    print(f"wrote {out.frame} schedule ({out.grid.size} samples, J = {fmt(out.energy())}) to {args.out}")
    return 0


def cmd_propagate(args) -> int:
    cfg = _config(args)
    pulses = read_pulses(args.pulses)
    psi0 = _parse_psi(args.psi0) if args.psi0 else np.eye(cfg.system.n)[0]
    res = propagate_state(_propagation_frame(pulses), pulses, cfg.system, psi0, step=cfg.step)
    if args.out:
        write_trajectory(args.out, res)
    pops = ", ".join(fmt(p) for p in res.final_populations)
    print(f"final populations: {pops}")
    print(f"J = {fmt(res.energy)}")
    return 0


def _sweep_task(job) -> tuple:
    cfg, sign_p, sign_k = job
    lab = _schedule(cfg, sign_p, sign_k)
    res = propagate_state("lab", lab, cfg.system, np.eye(cfg.system.n)[0], step=cfg.step)
    return tuple(float(p) for p in res.final_populations), float(res.energy)


def cmd_sweep(args) -> int:
    base = _config(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("values", f"cannot parse {args.values!r}") from None
    if not values:
        raise ConfigError("values", "empty list")
    cfgs = []
    for v in values:
        cast = int(v) if args.param == "samples" else v
        if args.param == "samples" and cast != v:
            raise ConfigError("samples", f"not an integer: {v}")
        cfgs.append(replace(base, **{args.param: cast}))
    jobs = [(c, args.sign_p, args.sign_k) for c in cfgs]
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_task, jobs))
    else:
        results = [_sweep_task(j) for j in jobs]
    n = base.system.n
    header = [args.param] + [f"p{j}" for j in range(1, n + 1)] + ["J"]
    rows = [[float(v), *pops, J] for v, (pops, J) in zip(values, results)]
    if args.out:
        write_rows(args.out, header, rows)
    else:
        print(",".join(header))
        for r in rows:
            print(",".join(fmt(x) for x in r))
    return 0


def cmd_oracle(args) -> int:
    p = OracleProblem(
        problem=args.problem,
        segments=args.segments,
        mu=args.mu,
        seed=args.seed,
        restarts=args.restarts,
        max_iter=args.max_iter,
    )
    init = geodesic_warm_start(p) if args.warm_start else None
    res = optimize_controls(p, initial=init)
    print(f"best J = {fmt(res.J)}")
    print(f"infidelity = {res.infidelity:.6e}")
    print(f"gap to sqrt(3) pi/2 = {fmt(res.J - OPTIMAL_TIME)} (relative {res.gap:.3e})")
    print(f"converged runs: {sum(r.converged for r in res.runs)}/{len(res.runs)}")
    if args.out:
        dt = p.horizon / p.segments
        rows = []
        for k, (u1, u2) in enumerate(res.controls):
            rows.append([k * dt, u1.real, u1.imag, u2.real, u2.imag])
        write_rows(args.out, ["t_start", "re_u1", "im_u1", "re_u2", "im_u2"], rows)
    return 0


def cmd_f_scan(args) -> int:
    if args.a_step <= 0 or args.t_step <= 0:
        raise ConfigError("step", "grid steps must be positive")
    a = np.arange(args.a_min, args.a_max + 0.5 * args.a_step, args.a_step)
    t = np.arange(0.0, args.t_max + 0.5 * args.t_step, args.t_step)
    scan = scan_lemma(a, t, threshold=args.threshold)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("a,t,f_a\n")
            for ai in a:
                f = f_lemma(ai, t)
                for ti, fi in zip(t, f):
                    fh.write(f"{fmt(ai)},{fmt(ti)},{fmt(fi)}\n")
    if args.extrema:
        write_rows(args.extrema, ["a", "t", "f_a", "t_lemma"], [list(map(float, r)) for r in scan.near])
    print(f"max |f_a| = {fmt(scan.max_abs)} at a = {fmt(scan.argmax[0])}, t = {fmt(scan.argmax[1])}")
    print(f"points with |f_a| > 1 - {args.threshold:g}: {len(scan.near)}")
    for a_i, t_i, f_i, tl in scan.near:
        print(f"  a = {fmt(a_i)}, t = {fmt(t_i)}, f = {fmt(f_i)}, k pi/s = {fmt(tl)}")
    return 0


def _add_config_args(p, synth: bool = True) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--levels", help="comma-separated energies or a JSON config path")
    p.add_argument("--step", type=float, help="propagation step")
    if synth:
        p.add_argument("--problem", choices=("real", "complex"))
        p.add_argument("--theta1", type=float)
        p.add_argument("--theta3", type=float)
        p.add_argument("--alpha1", type=float)
        p.add_argument("--alpha2", type=float)
        p.add_argument("--samples", type=int)
        p.add_argument("--sign-p", type=int, choices=(-1, 1), help="default: -1 real, +1 complex")
        p.add_argument("--sign-k", type=int, choices=(-1, 1), default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kpcontrol", description="Minimum-energy three-level pulse synthesis and verification.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synthesize", help="write an optimal pulse schedule")
    _add_config_args(p)
    p.add_argument("--frame", choices=("lab", "driftless"), default="lab")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("propagate", help="propagate a pulse CSV")
    _add_config_args(p, synth=False)
    p.add_argument("--pulses", required=True)
    p.add_argument("--psi0", help="initial state, e.g. 1,0,0")
    p.add_argument("--out", help="trajectory CSV")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("sweep", help="final populations and J over one parameter")
    _add_config_args(p)
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="piecewise-constant energy minimisation")
    p.add_argument("--segments", type=int, default=40)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--problem", choices=("real", "complex"), default="complex")
    p.add_argument("--mu", type=float, default=1e3)
    p.add_argument("--max-iter", type=int, default=4000)
    p.add_argument("--warm-start", action="store_true", help="start from the sampled optimal controls")
    p.add_argument("--out", help="controls CSV")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("appendix-d", help="scan f_a(t) and locate |f_a| = 1")
    p.add_argument("--a-min", type=float, default=-4.0)
    p.add_argument("--a-max", type=float, default=4.0)
    p.add_argument("--a-step", type=float, default=1e-2)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--t-step", type=float, default=1e-3)
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--out", help="grid CSV (a, t, f_a)")
    p.add_argument("--extrema", help="CSV of near-extremal grid points")
    p.set_defaults(func=cmd_f_scan)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("kpcontrol: a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, UnsupportedProblemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
