import numpy as np
import pytest

from kpcontrol.errors import AccuracyError, InvalidInputError
from kpcontrol.geodesic import OPTIMAL_TIME, G0, Covector, Geodesic, covector_family, geodesic_path
from kpcontrol.pmpflow import lax_poincare_flow


def test_real_flow_conserves_and_reconstructs():
    grid = np.linspace(0, OPTIMAL_TIME, 11)
    r = lax_poincare_flow(covector_family("real", -1, 1), grid, step=1e-3)
    assert r.Mk_drift <= 1e-12
    assert r.reconstruction_error <= 1e-8
    assert r.g_samples.shape == (11, 3, 3)
    assert r.warning is None


def test_complex_flow_with_g0():
    A = covector_family("complex", 1, -1, 0.4, 2.0)
    grid = np.linspace(0, 2.0, 5)
    r = lax_poincare_flow(A, grid, step=1e-3, g0=G0)
    want = geodesic_path(Geodesic(A, g0=G0), grid)
    assert np.max(np.abs(r.g_samples - want)) < 1e-8
    assert r.Mk_drift <= 1e-12


def test_lax_equation_isospectral():
    # M(t) = g-independent conjugate of A, so its spectrum is fixed
    A = Covector("complex", a1=0.8, a2=0.3, a3=0.5, a4=0.2, a5=-0.1, theta1=1.0, theta2=-0.5, theta3=2.0)
    grid = np.linspace(0, 3, 4)
    r = lax_poincare_flow(A, grid, step=1e-3)
    ev0 = np.sort(np.linalg.eigvals(A.matrix).imag)
    for m in r.M_samples:
        mat = m.mat if hasattr(m, "mat") else m
        assert np.allclose(np.sort(np.linalg.eigvals(mat).imag), ev0, atol=1e-9)


def test_bad_grid():
    A = covector_family("real")
    with pytest.raises(InvalidInputError):
        lax_poincare_flow(A, [0.0, 1.0, 0.5])
    with pytest.raises(InvalidInputError):
        lax_poincare_flow(A, [0.0, 1.0], step=0.0)


def test_drift_warning(monkeypatch):
    import kpcontrol.pmpflow as pf

    monkeypatch.setattr(pf, "DRIFT_WARN", -1.0)
    with pytest.warns(RuntimeWarning):
        r = pf.lax_poincare_flow(covector_family("real"), [0.0, 0.1], step=1e-2)
    assert r.warning is not None


def test_divergence_raises():
    A = Covector("complex", a1=3.0, a2=2.0, a3=4.0, a4=3.0)
    with pytest.raises(AccuracyError):
        lax_poincare_flow(A, [0.0, 400.0], step=5.0)
