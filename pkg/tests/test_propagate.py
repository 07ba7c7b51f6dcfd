import math

import numpy as np
import pytest

from kpcontrol.driftfree import LevelSystem, PulseSchedule
from kpcontrol.errors import AccuracyError, InvalidInputError
from kpcontrol.geodesic import OPTIMAL_TIME, closed_form_controls, closed_form_state
from kpcontrol.matcore import expm
from kpcontrol.propagate import (
    as_state,
    hamiltonian_at,
    propagate_resolvent,
    propagate_state,
)

SYS = LevelSystem((0.0, 1.0, 2.5))


def test_as_state():
    assert np.allclose(as_state([0, 1, 0]), [0, 1, 0])
    with pytest.raises(InvalidInputError):
        as_state([1, 1, 0])
    with pytest.raises(InvalidInputError):
        as_state([1, 0], n=3)


def test_constant_controls_match_expm():
    # piecewise-constant (here constant) driftless controls: exact answer is expm
    u = np.array([0.3 + 0.4j, -0.7j])
    g = np.linspace(0, 2.0, 3)
    s = PulseSchedule("driftless_complex", g, np.repeat(u[:, None], 3, axis=1))
    psi0 = np.array([1, 0, 0], dtype=complex)
    r = propagate_state("driftless_complex", s, SYS, psi0, step=1e-3)
    h = hamiltonian_at("driftless_complex", s, SYS, 0.5)
    want = expm(2.0 * h) @ psi0
    assert np.max(np.abs(r.final_state - want)) < 1e-12
    assert r.energy == pytest.approx(2.0 * np.sum(np.abs(u) ** 2))


def test_lab_free_evolution():
    # no pulses: psi(t) = e^{-i E t} psi0
    g = np.linspace(0, 3.0, 2)
    s = PulseSchedule("lab", g, np.zeros((2, 2)))
    psi0 = np.array([0.6, 0, 0.8j])
    r = propagate_state("lab", s, SYS, psi0, step=1e-3)
    want = np.exp(-1j * np.array(SYS.energies) * 3.0) * psi0
    assert np.max(np.abs(r.final_state - want)) < 1e-11


def test_hamiltonian_hermitian_lab():
    g = np.linspace(0, 1, 5)
    s = PulseSchedule("lab", g, np.vstack([np.exp(1j * g), 2 * g]))
    h = hamiltonian_at("lab", s, SYS, 0.3)
    assert np.allclose(h, h.conj().T)
    assert np.allclose(np.diag(h).real, SYS.energies)


def test_optimal_real_trajectory():
    t = np.linspace(0, OPTIMAL_TIME, 2**15 + 1)
    u = closed_form_controls("real", t).real
    s = PulseSchedule("driftless_real", t, u, phases=(0.0, 0.0))
    r = propagate_state("driftless_real", s, SYS, [1, 0, 0], step=1e-4)
    want = closed_form_state("real", r.grid).T
    assert np.max(np.abs(r.states - want)) < 1e-8
    assert r.final_populations[2] >= 1 - 1e-9
    assert r.energy_accum[-1] == pytest.approx(r.energy, abs=1e-15)
    assert np.all(np.diff(r.energy_accum) >= 0)
    assert r.norm_error() < 1e-10


def test_resolvent_is_unitary_and_consistent():
    t = np.linspace(0, 1.5, 3001)
    u = closed_form_controls("complex", t, theta1=0.3, theta3=1.0)
    s = PulseSchedule("driftless_complex", t, u)
    traj = propagate_resolvent("driftless_complex", s, SYS, step=1e-3)
    assert traj.unitarity_error() < 1e-9
    psi0 = np.array([0, 0.6, 0.8])
    r = propagate_state("driftless_complex", s, SYS, psi0, step=1e-3)
    assert np.max(np.abs(traj.apply(psi0) - r.states)) < 1e-12


def test_frame_mismatch_and_step():
    g = np.linspace(0, 1, 3)
    s = PulseSchedule("lab", g, np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        propagate_state("driftless_complex", s, SYS, [1, 0, 0])
    with pytest.raises(InvalidInputError):
        propagate_state("lab", s, LevelSystem((0.0, 1.0)), [1, 0])
    with pytest.raises(InvalidInputError):
        propagate_state("lab", s, SYS, [1, 0, 0], step=-1.0)


def test_accuracy_budget():
    # huge pulses with a coarse step blow the norm budget
    g = np.linspace(0, 10, 3)
    s = PulseSchedule("lab", g, np.full((2, 3), 5.0))
    with pytest.raises(AccuracyError):
        propagate_state("lab", s, SYS, [1, 0, 0], step=0.5)
    with pytest.raises(AccuracyError):
        propagate_resolvent("lab", s, SYS, step=0.5)
