"""CSV and JSON formats used by the command line.

Pulse CSV::

    # frame=lab
    # phases=0,0            (optional)
    t,re_O1,im_O1,re_O2,im_O2
    ...

Driftless schedules use ``re_u1, im_u1, ...`` columns.  Floats are written
with 17 significant digits so files round-trip bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .driftfree import FRAMES, LevelSystem, PulseSchedule
from .errors import InvalidInputError

FLOAT_FMT = "%.17g"

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_levels",
    "fmt",
    "write_pulses",
    "read_pulses",
    "write_trajectory",
    "write_rows",
]


class ConfigError(InvalidInputError):
    """Malformed configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def fmt(x: float) -> str:
    return FLOAT_FMT % x


@dataclass
class RunConfig:
    levels: list = field(default_factory=lambda: [0.0, 1.0, 2.5])
    problem: str = "complex"
    theta1: float = 0.0
    theta3: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    step: float = 1e-4
    samples: int = 32769

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.levels, (list, tuple)) or len(self.levels) < 2:
            raise ConfigError("levels", "expected an array of at least two energies")
        try:
            lv = [float(x) for x in self.levels]
        except (TypeError, ValueError):
            raise ConfigError("levels", "energies must be numbers") from None
        if not all(math.isfinite(x) for x in lv) or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigError("levels", "energies must be finite and strictly increasing")
        self.levels = lv
        if self.problem not in ("real", "complex"):
            raise ConfigError("problem", f"expected 'real' or 'complex', got {self.problem!r}")
        for name in ("theta1", "theta3", "alpha1", "alpha2", "step"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(name, "expected a finite number")
            setattr(self, name, float(v))
        if self.step <= 0:
            raise ConfigError("step", "must be positive")
        if isinstance(self.samples, bool) or not isinstance(self.samples, int) or self.samples < 2:
            raise ConfigError("samples", "expected an integer >= 2")

    @property
    def system(self) -> LevelSystem:
        return LevelSystem(tuple(self.levels))


def load_config(path, **overrides) -> RunConfig:
    """Read a JSON config; non-None keyword overrides win over file values."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown key")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data)


def parse_levels(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("levels", f"cannot parse {text!r}") from None


def _prefix(frame: str) -> str:
    return "O" if frame == "lab" else "u"


def write_pulses(path, s: PulseSchedule) -> None:
    p = _prefix(s.frame)
    with open(path, "w", newline="") as fh:
        fh.write(f"# frame={s.frame}\n")
        if s.phases is not None:
            fh.write("# phases=" + ",".join(fmt(a) for a in s.phases) + "\n")
        w = csv.writer(fh)
        header = ["t"]
        for j in range(1, s.channels + 1):
            header += [f"re_{p}{j}", f"im_{p}{j}"]
        w.writerow(header)
        for k, t in enumerate(s.grid):
            row = [fmt(t)]
            for c in s.controls[:, k]:
                row += [fmt(c.real), fmt(c.imag)]
            w.writerow(row)


def read_pulses(path) -> PulseSchedule:
    meta = {}
    lines = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        k, v = token.split("=", 1)
                        meta[k.strip()] = v.strip()
            elif line.strip():
                lines.append(line)
    frame = meta.get("frame")
    if frame not in FRAMES:
        raise ConfigError("frame", f"missing or unknown frame tag in {path}")
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    if header[0] != "t" or len(header) % 2 == 0:
        raise ConfigError("pulses", f"unexpected header {header}")
    data = np.array(body, dtype=float)
    grid = data[:, 0]
    controls = (data[:, 1::2] + 1j * data[:, 2::2]).T
    if frame == "driftless_real":
        controls = controls.real
    phases = None
    if "phases" in meta:
        phases = tuple(float(x) for x in meta["phases"].split(","))
    return PulseSchedule(frame, grid, controls, phases=phases)


def write_trajectory(path, result) -> None:
    """Trajectory CSV: amplitudes, populations and accumulated energy."""
    n = result.states.shape[1]
    header = ["t"]
    for j in range(1, n + 1):
        header += [f"re_c{j}", f"im_c{j}"]
    header += [f"p{j}" for j in range(1, n + 1)] + ["J_accum"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, t in enumerate(result.grid):
            row = [fmt(t)]
            for c in result.states[k]:
                row += [fmt(c.real), fmt(c.imag)]
            row += [fmt(x) for x in result.populations[k]]
            row.append(fmt(result.energy_accum[k]))
            w.writerow(row)


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, float) else x for x in r])
