import math

import numpy as np
import pytest

from kpcontrol.driftfree import (
    LevelSystem,
    PulseSchedule,
    chain_coupling,
    coupling_13,
    driftless_generators,
    interaction_state,
    resonant_frame_state,
    resonant_phase_choice,
    to_driftless_complex,
    to_lab_frame,
    wrap_phase,
)
from kpcontrol.errors import InvalidInputError
from kpcontrol.liealg import lie_closure_dim
from kpcontrol.propagate import propagate_state


def test_level_system():
    s = LevelSystem((0.0, 1.0, 2.5))
    assert s.n == 3
    assert np.allclose(s.omegas, [1.0, 1.5])
    assert np.allclose(np.diag(s.drift), [0, 1, 2.5])
    for bad in [(0.0,), (0.0, 0.0, 1.0), (1.0, 0.5), (0.0, math.inf)]:
        with pytest.raises(InvalidInputError):
            LevelSystem(bad)


def test_wrap_phase_range():
    x = np.linspace(-20, 20, 2001)
    w = wrap_phase(x)
    assert np.all(w > -math.pi) and np.all(w <= math.pi)
    assert np.allclose(np.exp(1j * w), np.exp(1j * x))
    assert wrap_phase(-math.pi) == math.pi
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)


def test_schedule_validation():
    g = np.linspace(0, 1, 5)
    with pytest.raises(InvalidInputError):
        PulseSchedule("rotating", g, np.zeros((2, 5)))
    with pytest.raises(InvalidInputError):
        PulseSchedule("lab", g, np.zeros((2, 4)))
    with pytest.raises(InvalidInputError):
        PulseSchedule("lab", g[::-1], np.zeros((2, 5)))
    with pytest.raises(InvalidInputError):
        PulseSchedule("driftless_real", g, 1j * np.ones((2, 5)))


def test_schedule_energy_and_sampling():
    g = np.linspace(0, 2, 101)
    s = PulseSchedule("driftless_complex", g, np.vstack([np.full(101, 1 + 1j), g]))
    # |1+i|^2 * 2 + int_0^2 t^2 dt = 4 + 8/3 (trapezoid error 2 h^2 / 12 * ... )
    h = g[1] - g[0]
    assert s.energy() == pytest.approx(4 + 8 / 3 + 2 * h**2 / 6, abs=1e-12)
    assert s.sample(0.5)[1] == pytest.approx(0.5)
    assert s.sample([0.25, 1.5]).shape == (2, 2)
    with pytest.raises(InvalidInputError):
        s.sample(2.1)


def test_couplings():
    m = chain_coupling("M", 2, 0.3 + 0.4j, 4)
    assert np.allclose(m, m.conj().T)
    assert m[1, 2] == 0.3 + 0.4j
    n = chain_coupling("N", 1, 0.3 + 0.4j, 3)
    assert np.allclose(n, -n.conj().T)
    assert np.allclose(coupling_13(2.0), [[0, 0, 2], [0, 0, 0], [-2, 0, 0]])
    with pytest.raises(InvalidInputError):
        chain_coupling("M", 3, 1.0, 3)
    with pytest.raises(InvalidInputError):
        chain_coupling("Q", 1, 1.0, 3)


def test_generators_controllable():
    assert lie_closure_dim(driftless_generators(3, True)) == 8
    assert lie_closure_dim(driftless_generators(3, False)) == 3
    assert lie_closure_dim(driftless_generators(4, True)) == 15


def test_frame_roundtrip(rng):
    sys_ = LevelSystem((0.0, 0.7, 2.0, 2.2))
    g = np.linspace(0, 3, 50)
    u = rng.normal(size=(3, 50)) + 1j * rng.normal(size=(3, 50))
    d = PulseSchedule("driftless_complex", g, u)
    lab = to_lab_frame(d, sys_)
    back = to_driftless_complex(lab, sys_)
    assert np.max(np.abs(back.controls - u)) < 1e-14
    assert lab.energy() == pytest.approx(d.energy(), rel=1e-14)


def test_real_frame_needs_phases():
    sys_ = LevelSystem((0.0, 1.0, 2.0))
    d = PulseSchedule("driftless_real", [0, 1], np.ones((2, 2)))
    with pytest.raises(InvalidInputError):
        to_lab_frame(d, sys_)


def test_resonant_phase_choice():
    lam = resonant_phase_choice([0.3, -1.0])
    assert lam[0] == 0.0
    assert np.allclose(np.exp(1j * lam), np.exp(1j * np.array([0, math.pi / 2 - 0.3, math.pi - 0.3 + 1.0])))


def _smooth(g, k):
    return np.vstack([np.sin(g + k) * (1 + 0.3j), 0.8 * np.cos(2 * g - k)])


def test_gauge_equivalence_complex():
    # lab dynamics and driftless dynamics agree after e^{i Delta t}
    sys_ = LevelSystem((0.0, 1.0, 2.5))
    g = np.linspace(0, 2.0, 20001)
    d = PulseSchedule("driftless_complex", g, _smooth(g, 0.4))
    lab = to_lab_frame(d, sys_)
    psi0 = np.array([0.6, 0.8j, 0.0])
    a = propagate_state("lab", lab, sys_, psi0)
    b = propagate_state("driftless_complex", d, sys_, psi0)
    for k in (0, len(a.grid) // 2, -1):
        lam = interaction_state(a.states[k], sys_, a.grid[k])
        assert np.max(np.abs(lam - b.states[k])) < 1e-8


def test_gauge_equivalence_real():
    sys_ = LevelSystem((0.0, 1.0, 2.5))
    alphas = (0.9, -2.0)
    g = np.linspace(0, 2.0, 20001)
    u = np.vstack([np.sin(g), np.cos(1.5 * g)])
    d = PulseSchedule("driftless_real", g, u, phases=alphas)
    lab = to_lab_frame(d, sys_)
    psi_lab0 = np.array([1.0, 0.0, 0.0])
    phi0 = resonant_frame_state(psi_lab0, sys_, 0.0, alphas)
    a = propagate_state("lab", lab, sys_, psi_lab0)
    b = propagate_state("driftless_real", d, sys_, phi0)
    phi_T = resonant_frame_state(a.final_state, sys_, a.grid[-1], alphas)
    assert np.max(np.abs(phi_T - b.final_state)) < 1e-8
