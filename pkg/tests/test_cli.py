import csv
import json

import numpy as np
import pytest

from kpcontrol.cli import run
from kpcontrol.driftfree import LevelSystem, PulseSchedule
from kpcontrol.formats import ConfigError, RunConfig, load_config, read_pulses, write_pulses
from kpcontrol.geodesic import OPTIMAL_TIME, synthesize_pulses
from kpcontrol.propagate import propagate_state


def _csv(path):
    rows = [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))]
    return rows[0], np.array(rows[1:], dtype=float)


def test_runconfig_validation():
    with pytest.raises(ConfigError) as e:
        RunConfig(levels=[0, 2, 1])
    assert e.value.field == "levels"
    with pytest.raises(ConfigError) as e:
        RunConfig(step=-1.0)
    assert e.value.field == "step"
    with pytest.raises(ConfigError) as e:
        RunConfig(problem="quantum")
    assert e.value.field == "problem"
    with pytest.raises(ConfigError) as e:
        RunConfig(samples=1)
    assert e.value.field == "samples"


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"levels": [0, 1, 3], "theta1": 0.5}))
    c = load_config(p, theta3=0.25)
    assert c.levels == [0.0, 1.0, 3.0] and c.theta1 == 0.5 and c.theta3 == 0.25
    p.write_text(json.dumps({"levels": [0, 1, 3], "colour": 1}))
    with pytest.raises(ConfigError) as e:
        load_config(p)
    assert e.value.field == "colour"


def test_pulse_roundtrip_bitwise(tmp_path, rng):
    g = np.sort(rng.uniform(0, 1, 20))
    c = rng.normal(size=(2, 20)) + 1j * rng.normal(size=(2, 20))
    s = PulseSchedule("lab", g, c, phases=(0.1, 0.2))
    write_pulses(tmp_path / "p.csv", s)
    t = read_pulses(tmp_path / "p.csv")
    assert t.frame == "lab" and t.phases == (0.1, 0.2)
    assert np.array_equal(t.grid, g) and np.array_equal(t.controls, c)
    first = open(tmp_path / "p.csv").readline().strip()
    assert first == "# frame=lab"


def test_verify_command(tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert run(["verify", "--report", str(rep)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 10
    data = json.loads(rep.read_text())
    assert data["ok"] is True
    assert data["killing_ratio_su3"] == pytest.approx(6.0, abs=1e-10)


def test_synthesize_propagate_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"levels": [0.0, 1.0, 2.5], "problem": "complex", "theta1": 0.3, "samples": 8193}))
    pulses = tmp_path / "p.csv"
    traj = tmp_path / "t.csv"
    assert run(["synthesize", "--levels", str(cfg), "--out", str(pulses)]) == 0
    assert run(["propagate", "--pulses", str(pulses), "--levels", str(cfg), "--out", str(traj)]) == 0
    header, data = _csv(traj)
    assert header == ["t", "re_c1", "im_c1", "re_c2", "im_c2", "re_c3", "im_c3", "p1", "p2", "p3", "J_accum"]
    # same pipeline in memory
    sys_ = LevelSystem((0.0, 1.0, 2.5))
    s = synthesize_pulses("complex", sys_, samples=8193, theta1=0.3)
    r = propagate_state("lab", s, sys_, [1, 0, 0])
    states = data[:, 1:7:2] + 1j * data[:, 2:7:2]
    assert np.max(np.abs(states - r.states)) <= 1e-12
    assert abs(data[-1, -1] - r.energy) <= 1e-12
    header, _ = _csv(pulses)
    assert header == ["t", "re_O1", "im_O1", "re_O2", "im_O2"]


def test_synthesize_driftless_frame(tmp_path):
    out = tmp_path / "d.csv"
    assert run(["synthesize", "--problem", "real", "--frame", "driftless", "--samples", "101", "--out", str(out)]) == 0
    s = read_pulses(out)
    assert s.frame == "driftless_real"
    header, _ = _csv(out)
    assert header[1] == "re_u1"


def test_sweep(tmp_path):
    out = tmp_path / "s.csv"
    code = run(["sweep", "--param", "theta1", "--values", "0,1.5", "--samples", "8193", "--step", "1e-3", "--out", str(out)])
    assert code == 0
    header, data = _csv(out)
    assert header == ["theta1", "p1", "p2", "p3", "J"]
    assert data.shape == (2, 5)
    assert np.all(data[:, 3] > 1 - 1e-6)
    assert np.allclose(data[:, 4], OPTIMAL_TIME, atol=1e-6)


def test_f_scan_command(tmp_path, capsys):
    grid = tmp_path / "g.csv"
    ext = tmp_path / "e.csv"
    code = run(["appendix-d", "--a-min", "0.5", "--a-max", "0.6", "--a-step", "0.1", "--t-max", "3", "--t-step", "0.01",
                "--out", str(grid), "--extrema", str(ext)])
    assert code == 0
    header, data = _csv(grid)
    assert header == ["a", "t", "f_a"] and data.shape == (2 * 301, 3)
    assert "max |f_a|" in capsys.readouterr().out


def test_oracle_command(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert run(["oracle", "--segments", "4", "--restarts", "1", "--max-iter", "20", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "best J" in text and "gap" in text
    header, data = _csv(out)
    assert data.shape == (4, 5)


def test_exit_codes(tmp_path, capsys):
    assert run([]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["synthesize"]) == 2  # missing --out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"levels": [0, 1, 1]}))
    assert run(["synthesize", "--levels", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert "levels" in capsys.readouterr().err
    assert run(["synthesize", "--levels", "0,1,2,3", "--out", str(tmp_path / "x.csv")]) == 2
    assert run(["propagate", "--pulses", str(tmp_path / "missing.csv")]) == 2


def test_verify_failure_exit(monkeypatch):
    import kpcontrol.cli as cli
    from kpcontrol.checks import CheckResult, VerifyReport

    monkeypatch.setattr(cli, "run_verify", lambda seed=0: VerifyReport(checks=[CheckResult("x", False)]))
    assert run(["verify"]) == 1
