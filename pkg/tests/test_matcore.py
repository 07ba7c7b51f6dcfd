import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpcontrol.errors import InvalidInputError
from kpcontrol.matcore import (
    as_matrix,
    dagger,
    expm,
    expm_path,
    frobenius,
    is_skew_hermitian,
    is_special_unitary,
    is_unitary,
)

from conftest import random_skew_hermitian


def taylor_expm(m, terms=60):
    # scaling and squaring around a plain Taylor sum
    k = max(0, int(math.ceil(math.log2(max(np.linalg.norm(m), 1.0)))) + 2)
    a = m / 2**k
    out = np.eye(len(m), dtype=complex)
    term = np.eye(len(m), dtype=complex)
    for j in range(1, terms):
        term = term @ a / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def test_expm_matches_taylor_skew(rng):
    for _ in range(20):
        m = random_skew_hermitian(rng) * 3
        assert frobenius(expm(m), taylor_expm(m)) < 1e-12


def test_expm_matches_taylor_general(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert frobenius(expm(m), taylor_expm(m)) < 1e-11


def test_expm_rotation_closed_form():
    th = 0.83
    m = np.array([[0, th, 0], [-th, 0, 0], [0, 0, 0]], dtype=float)
    want = np.array([[math.cos(th), math.sin(th), 0], [-math.sin(th), math.cos(th), 0], [0, 0, 1]])
    assert frobenius(expm(m), want) < 1e-15


def test_expm_skew_is_unitary(rng):
    m = random_skew_hermitian(rng, traceless=True) * 10
    assert is_special_unitary(expm(m), 1e-12)


def test_expm_path_matches_pointwise(rng):
    m = random_skew_hermitian(rng)
    times = np.linspace(-2, 5, 11)
    path = expm_path(m, times)
    assert path.shape == (11, 3, 3)
    for t, g in zip(times, path):
        assert frobenius(g, expm(t * m)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(-3, 3, allow_nan=False),
    st.floats(-3, 3, allow_nan=False),
)
def test_one_parameter_group(seed, s, t):
    m = random_skew_hermitian(np.random.default_rng(seed))
    assert frobenius(expm(s * m) @ expm(t * m), expm((s + t) * m)) < 1e-11


def test_as_matrix_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        as_matrix(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        as_matrix(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(InvalidInputError):
        expm(np.zeros(3))


def test_predicates(rng):
    m = random_skew_hermitian(rng)
    assert is_skew_hermitian(m)
    assert not is_skew_hermitian(m + np.eye(3))
    assert frobenius(dagger(m), -m) == 0.0
    u = expm(m)
    assert is_unitary(u)
    assert not is_unitary(2 * u)
    # det of e^m is e^{tr m}, not 1 unless traceless
    assert is_special_unitary(u) == (abs(np.trace(m)) < 1e-12)
    assert is_special_unitary(np.diag([1j, -1j, 1]))
    assert not is_special_unitary(np.diag([1j, 1j, 1]))
