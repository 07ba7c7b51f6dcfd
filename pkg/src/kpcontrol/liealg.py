"""Lie-algebra structure for so(n) and su(n) in their matrix presentations.

Elements are skew-Hermitian matrices tagged with the algebra they live in.
Linear-algebra questions (coordinates, spans, containment) are answered in
the real vector space obtained by stacking real and imaginary parts of the
matrix entries.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

SPAN_TOL = 1e-10

__all__ = [
    "Algebra",
    "SO3",
    "SU3",
    "AlgebraElement",
    "CartanDecomposition",
    "CartanReport",
    "MATRICES",
    "element",
    "bracket",
    "killing",
    "metric_inner",
    "coordinates",
    "span_dim",
    "lie_closure_dim",
    "structure_constants",
    "verify_cartan",
    "goh_span_dim",
    "killing_trace_ratio",
    "so3_decomposition",
    "su3_decomposition",
    "algebra_basis",
]


@dataclass(frozen=True)
class Algebra:
    kind: str  # "so" or "su"
    n: int

    def __post_init__(self):
        if self.kind not in ("so", "su") or self.n < 2:
            raise InvalidInputError(f"unknown algebra {self.kind}({self.n})")

    @property
    def dim(self) -> int:
        n = self.n
        return n * (n - 1) // 2 if self.kind == "so" else n * n - 1

    @classmethod
    def parse(cls, tag: str) -> "Algebra":
        m = re.fullmatch(r"(so|su)\(?(\d+)\)?", tag.strip().lower())
        if m is None:
            raise InvalidInputError(f"cannot parse algebra tag {tag!r}")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self):
        return f"{self.kind}({self.n})"


SO3 = Algebra("so", 3)
SU3 = Algebra("su", 3)


def _check_member(alg: Algebra, m: np.ndarray, tol: float = 1e-12) -> None:
    if m.shape != (alg.n, alg.n):
        raise InvalidInputError(f"{alg} element must be {alg.n}x{alg.n}, got {m.shape}")
    scale = max(1.0, float(np.linalg.norm(m)))
    if np.linalg.norm(m + m.conj().T) > tol * scale:
        raise InvalidInputError(f"matrix is not skew-Hermitian, cannot tag as {alg}")
    if alg.kind == "so" and np.linalg.norm(m.imag) > tol * scale:
        raise InvalidInputError(f"{alg} elements must be real")
    if alg.kind == "su" and abs(np.trace(m)) > tol * scale:
        raise InvalidInputError(f"{alg} elements must be traceless")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """A matrix in so(n) or su(n)."""

    algebra: Algebra
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        _check_member(self.algebra, m)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def _same(self, other: "AlgebraElement") -> None:
        if not isinstance(other, AlgebraElement):
            raise InvalidInputError(f"expected AlgebraElement, got {type(other).__name__}")
        if other.algebra != self.algebra:
            raise InvalidInputError(f"algebra mismatch: {self.algebra} vs {other.algebra}")

    def __add__(self, other):
        self._same(other)
        return AlgebraElement(self.algebra, self.mat + other.mat)

    def __sub__(self, other):
        self._same(other)
        return AlgebraElement(self.algebra, self.mat - other.mat)

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.mat)

    def __mul__(self, s):
        s = float(s)
        return AlgebraElement(self.algebra, s * self.mat)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.mat))

    def allclose(self, other: "AlgebraElement", tol: float = 1e-12) -> bool:
        self._same(other)
        return bool(np.linalg.norm(self.mat - other.mat) <= tol)

    def retag(self, algebra: Algebra) -> "AlgebraElement":
        """Same matrix viewed in another algebra, e.g. so(3) inside su(3)."""
        return AlgebraElement(algebra, self.mat)


def _E(a: int, b: int, n: int = 3) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    m[a, b] = 1.0
    return m


# Generators of the three-level problem, 0-based matrix units.
MATRICES: dict[str, np.ndarray] = {
    "X1": _E(0, 1) - _E(1, 0),
    "X2": _E(1, 2) - _E(2, 1),
    "X3": _E(0, 2) - _E(2, 0),
    "Y1": 1j * (_E(0, 1) + _E(1, 0)),
    "Y2": 1j * (_E(1, 2) + _E(2, 1)),
    "Z1": _E(0, 2) - _E(2, 0),
    "Z2": 1j * (_E(0, 2) + _E(2, 0)),
    "Z3": np.diag([1j, -1j, 0]),
    "Z4": np.diag([0, 1j, -1j]),
}


def element(name: str, algebra: Algebra = SU3) -> AlgebraElement:
    """Named generator (``"X1"``, ``"Y2"``, ``"Z3"``, ...) tagged with ``algebra``."""
    try:
        return AlgebraElement(algebra, MATRICES[name])
    except KeyError:
        raise InvalidInputError(f"unknown generator {name!r}") from None


def so3_decomposition() -> "CartanDecomposition":
    return CartanDecomposition(
        SO3, [element("X1", SO3), element("X2", SO3)], [element("X3", SO3)]
    )


def su3_decomposition() -> "CartanDecomposition":
    return CartanDecomposition(
        SU3,
        [element(k, SU3) for k in ("X1", "X2", "Y1", "Y2")],
        [element(k, SU3) for k in ("Z1", "Z2", "Z3", "Z4")],
    )


def algebra_basis(algebra: Algebra) -> list[AlgebraElement]:
    """A real basis of so(n) or su(n) built from matrix units."""
    n = algebra.n
    out = []
    for a, b in itertools.combinations(range(n), 2):
        out.append(AlgebraElement(algebra, _E(a, b, n) - _E(b, a, n)))
    if algebra.kind == "su":
        for a, b in itertools.combinations(range(n), 2):
            out.append(AlgebraElement(algebra, 1j * (_E(a, b, n) + _E(b, a, n))))
        for a in range(n - 1):
            out.append(AlgebraElement(algebra, 1j * (_E(a, a, n) - _E(a + 1, a + 1, n))))
    return out


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """Commutator ``XY - YX``."""
    x._same(y)
    return AlgebraElement(x.algebra, x.mat @ y.mat - y.mat @ x.mat)


def metric_inner(x: AlgebraElement, y: AlgebraElement) -> float:
    """Sub-Riemannian inner product ``-1/2 Re Tr(XY)``."""
    return float(-0.5 * np.trace(np.asarray(x.mat) @ np.asarray(y.mat)).real)


def _realify(mats) -> np.ndarray:
    """Columns are real vectorisations of the given matrices."""
    cols = [np.concatenate([np.ravel(m).real, np.ravel(m).imag]) for m in mats]
    return np.array(cols, dtype=float).T


def _rank(a: np.ndarray, tol: float = SPAN_TOL) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def span_dim(elements, tol: float = SPAN_TOL) -> int:
    """Real dimension of the span of the given elements (or raw matrices)."""
    mats = [getattr(e, "mat", e) for e in elements]
    if not mats:
        return 0
    return _rank(_realify(mats), tol)


def coordinates(x, basis) -> tuple[np.ndarray, float]:
    """Least-squares real coordinates of ``x`` in ``basis`` and the residual norm."""
    b = _realify([e.mat for e in basis])
    v = _realify([getattr(x, "mat", x)])[:, 0]
    c, *_ = np.linalg.lstsq(b, v, rcond=None)
    return c, float(np.linalg.norm(b @ c - v))


def _require_spanning(basis) -> None:
    if not basis:
        raise InvalidInputError("empty basis")
    alg = basis[0].algebra
    if any(e.algebra != alg for e in basis):
        raise InvalidInputError("basis elements carry different algebra tags")
    if span_dim(basis) != alg.dim:
        raise InvalidInputError(
            f"basis spans {span_dim(basis)} dimensions, {alg} needs {alg.dim}"
        )


def _ad_matrix(x: AlgebraElement, basis, pinv: np.ndarray) -> np.ndarray:
    images = _realify([x.mat @ b.mat - b.mat @ x.mat for b in basis])
    return pinv @ images


def killing(x: AlgebraElement, y: AlgebraElement, basis) -> float:
    """Killing form ``Tr(ad_X o ad_Y)`` with ad matrices expressed in ``basis``."""
    _require_spanning(basis)
    x._same(basis[0])
    y._same(basis[0])
    pinv = np.linalg.pinv(_realify([b.mat for b in basis]))
    return float(np.trace(_ad_matrix(x, basis, pinv) @ _ad_matrix(y, basis, pinv)))


def structure_constants(basis) -> np.ndarray:
    """``C[i, j, k]`` with ``[B_i, B_j] = sum_k C[i, j, k] B_k``."""
    _require_spanning(basis)
    d = len(basis)
    pinv = np.linalg.pinv(_realify([b.mat for b in basis]))
    out = np.empty((d, d, d))
    for i, j in itertools.product(range(d), repeat=2):
        c = basis[i].mat @ basis[j].mat - basis[j].mat @ basis[i].mat
        out[i, j] = pinv @ _realify([c])[:, 0]
    return out


def killing_trace_ratio(basis, tol: float = 1e-12) -> tuple[float, float]:
    """Measured ``Kil(X, Y) / Tr(XY)`` over basis pairs with nonzero trace form.

    Returns ``(ratio, spread)`` where ``spread`` is the largest deviation of
    any pair's ratio from the mean.
    """
    _require_spanning(basis)
    pinv = np.linalg.pinv(_realify([b.mat for b in basis]))
    ads = [_ad_matrix(b, basis, pinv) for b in basis]
    ratios = []
    for i, j in itertools.product(range(len(basis)), repeat=2):
        tr = np.trace(basis[i].mat @ basis[j].mat).real
        if abs(tr) > tol:
            ratios.append(np.trace(ads[i] @ ads[j]) / tr)
    r = np.array(ratios)
    return float(r.mean()), float(np.abs(r - r.mean()).max())


def lie_closure_dim(generators, max_depth: int = 10) -> int:
    """Dimension of the Lie algebra generated by ``generators`` (iterated brackets)."""
    span = list(generators)
    dim = span_dim(span)
    for _ in range(max_depth):
        new = span + [bracket(a, b) for a, b in itertools.combinations(span, 2)]
        # keep an independent subset to stop the list from exploding
        kept: list[AlgebraElement] = []
        for e in new:
            if span_dim(kept + [e]) > len(kept):
                kept.append(e)
        span = kept
        if len(span) == dim:
            break
        dim = len(span)
    return dim


@dataclass
class CartanDecomposition:
    algebra: Algebra
    p_basis: list
    k_basis: list

    def __post_init__(self):
        for e in self.p_basis + self.k_basis:
            if e.algebra != self.algebra:
                raise InvalidInputError("basis element tag does not match decomposition")

    @property
    def basis(self) -> list:
        return list(self.p_basis) + list(self.k_basis)

    def project_p(self, m: np.ndarray) -> np.ndarray:
        """Component of the matrix ``m`` along p (metric-orthogonal expansion)."""
        out = np.zeros_like(self.p_basis[0].mat)
        for x in self.p_basis:
            out = out + (-0.5 * np.trace(m @ x.mat).real) * x.mat
        return out


@dataclass
class CartanReport:
    kk_in_k: bool
    pp_in_k: bool
    kp_in_p: bool
    pp_equals_k: bool
    kp_equals_p: bool
    max_residual: float

    @property
    def ok(self) -> bool:
        return all(
            (self.kk_in_k, self.pp_in_k, self.kp_in_p, self.pp_equals_k, self.kp_equals_p)
        )


def _containment(pairs, target) -> tuple[float, list]:
    worst = 0.0
    brackets = [bracket(a, b) for a, b in pairs]
    for c in brackets:
        if target:
            _, res = coordinates(c, target)
        else:
            res = c.norm()
        worst = max(worst, res)
    return worst, brackets


def verify_cartan(d: CartanDecomposition, tol: float = 1e-12) -> CartanReport:
    """Check the Cartan commutation relations and the equalities [p,p]=k, [k,p]=p."""
    p, k = d.p_basis, d.k_basis
    r_kk, _ = _containment(itertools.product(k, k), k)
    r_pp, pp = _containment(itertools.product(p, p), k)
    r_kp, kp = _containment(itertools.product(k, p), p)
    return CartanReport(
        kk_in_k=r_kk <= tol,
        pp_in_k=r_pp <= tol,
        kp_in_p=r_kp <= tol,
        pp_equals_k=r_pp <= tol and span_dim(pp) == span_dim(k),
        kp_equals_p=r_kp <= tol and span_dim(kp) == span_dim(p),
        max_residual=max(r_kk, r_pp, r_kp),
    )


def goh_span_dim(p_basis) -> int:
    """Dimension of span(p ∪ [p, p]).

    Equal to the algebra dimension exactly when a covector annihilating the
    distribution and all its brackets must vanish, so strictly abnormal
    extremals cannot be optimal.
    """
    if not p_basis:
        raise InvalidInputError("empty p basis")
    brackets = [bracket(a, b) for a, b in itertools.combinations(p_basis, 2)]
    return span_dim(list(p_basis) + brackets)
