"""Small dense complex-matrix helpers and the matrix exponential.

Every exponential evaluated by this package is of a skew-Hermitian matrix, so
the main path diagonalises the Hermitian matrix ``iM`` and exponentiates the
(real) spectrum.  General inputs fall back to scipy's scaling-and-squaring
Pade(13) implementation.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InvalidInputError

__all__ = [
    "as_matrix",
    "dagger",
    "frobenius",
    "is_skew_hermitian",
    "expm",
    "expm_path",
    "is_special_unitary",
    "is_unitary",
]


def as_matrix(m) -> np.ndarray:
    """Coerce to a square complex128 array, checking shape and finiteness."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def frobenius(a: np.ndarray, b: np.ndarray | None = None) -> float:
    """Frobenius norm of ``a`` or of ``a - b``."""
    d = a if b is None else np.asarray(a) - np.asarray(b)
    return float(np.linalg.norm(d))


def is_skew_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m)
    scale = max(1.0, float(np.linalg.norm(m)))
    return bool(np.linalg.norm(m + dagger(m)) <= tol * scale)


def _expm_skew(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(1j * m)
    return (v * np.exp(-1j * w)) @ dagger(v)


def expm(m) -> np.ndarray:
    """Matrix exponential ``e^M``.

    Skew-Hermitian inputs take the eigendecomposition route, which returns a
    unitary matrix up to rounding.  Anything else goes through
    :func:`scipy.linalg.expm`.
    """
    a = as_matrix(m)
    if is_skew_hermitian(a):
        a = 0.5 * (a - dagger(a))
        return _expm_skew(a)
    return scipy.linalg.expm(a)


def expm_path(m, times) -> np.ndarray:
    """Stack of ``e^{t M}`` for every ``t`` in ``times``.

    One diagonalisation serves the whole time array, which is what makes dense
    scans along a geodesic cheap.  ``M`` must be skew-Hermitian.
    """
    a = as_matrix(m)
    if not is_skew_hermitian(a):
        raise InvalidInputError("expm_path requires a skew-Hermitian generator")
    a = 0.5 * (a - dagger(a))
    w, v = np.linalg.eigh(1j * a)
    t = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(t, w))
    return np.einsum("ij,...j,kj->...ik", v, phases, np.conj(v))


def is_unitary(m, tol: float = 1e-12) -> bool:
    a = np.asarray(m, dtype=complex)
    return bool(np.linalg.norm(dagger(a) @ a - np.eye(a.shape[0])) <= tol)


def is_special_unitary(m, tol: float = 1e-12) -> bool:
    """True iff ``||M^dag M - I||_F <= tol`` and ``|det M - 1| <= tol``."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return is_unitary(a, tol) and abs(np.linalg.det(a) - 1.0) <= tol
