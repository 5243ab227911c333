"""
Polynomial differential forms on C^N = R^{2N} with exact coefficients.

Architecture:
- real coordinates ordered (x_1, y_1, ..., x_N, y_N) as sympy symbols
- PolyOneForm: eta = sum_a f_a du_a; PolyTwoForm: omega = 1/2 sum_ab M_ab du_a ^ du_b
- exterior derivative, torus/circle averaging by Fourier filtering in the
  complex coordinates z, zbar, fibrewise radial homotopy, numeric evaluation
- PerturbationForm: an admissible eta together with d(eta)

Averaging is exact: a circle acting with weights w multiplies
z^alpha zbar^beta dz_j by exp(i t (w.(alpha - beta) + w_j)), so the average
keeps exactly the terms of total weight zero.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Sequence, Tuple

import numpy as np
import sympy as sp

from .errors import InputError

logger = logging.getLogger(__name__)


# ============================================================================
# COORDINATES
# ============================================================================

@lru_cache(maxsize=None)
def real_symbols(n: int) -> Tuple[sp.Symbol, ...]:
    xs = sp.symbols(f"x0:{n}", real=True)
    ys = sp.symbols(f"y0:{n}", real=True)
    return tuple(s for pair in zip(xs, ys) for s in pair)


@lru_cache(maxsize=None)
def complex_symbols(n: int) -> Tuple[sp.Symbol, ...]:
    """(z_1, zb_1, z_2, zb_2, ...) treated as independent variables."""
    zs = sp.symbols(f"z0:{n}")
    zbs = sp.symbols(f"zb0:{n}")
    return tuple(s for pair in zip(zs, zbs) for s in pair)


_T = sp.Symbol("t", real=True)


def _to_complex(expr: sp.Expr, n: int) -> sp.Expr:
    u, c = real_symbols(n), complex_symbols(n)
    subs = {}
    for j in range(n):
        z, zb = c[2 * j], c[2 * j + 1]
        subs[u[2 * j]] = (z + zb) / 2
        subs[u[2 * j + 1]] = (z - zb) / (2 * sp.I)
    return sp.expand(sp.sympify(expr).xreplace(subs))


def _to_real(expr: sp.Expr, n: int) -> sp.Expr:
    u, c = real_symbols(n), complex_symbols(n)
    subs = {}
    for j in range(n):
        x, y = u[2 * j], u[2 * j + 1]
        subs[c[2 * j]] = x + sp.I * y
        subs[c[2 * j + 1]] = x - sp.I * y
    return sp.expand(sp.sympify(expr).xreplace(subs))


@lru_cache(maxsize=None)
def _basis_change(n: int) -> Tuple[sp.Matrix, sp.Matrix]:
    """C with du = C dzeta, and its inverse; zeta = (z_1, zb_1, ...)."""
    block = sp.Matrix([[sp.Rational(1, 2), sp.Rational(1, 2)],
                       [1 / (2 * sp.I), -1 / (2 * sp.I)]])
    C = sp.diag(*([block] * n))
    return C, C.inv()


def _weights_of(n: int, circles: Sequence[Sequence[int]]) -> List[Tuple[int, ...]]:
    """Per-circle weight of each complex coordinate symbol (z_j: w_j, zb_j: -w_j)."""
    out = []
    for w in circles:
        if len(w) != n:
            raise InputError(f"circle weights of length {len(w)} for {n} coordinates")
        out.append(tuple(s for wj in w for s in (int(wj), -int(wj))))
    return out


def _filter(expr: sp.Expr, n: int, weights: List[Tuple[int, ...]], shift: Sequence[int]) -> sp.Expr:
    """Keep the monomials whose weight plus `shift` vanishes for every circle."""
    expr = sp.expand(expr)
    if expr == 0:
        return sp.Integer(0)
    gens = complex_symbols(n)
    try:
        poly = sp.Poly(expr, *gens)
    except sp.PolynomialError:
        raise InputError("averaging needs polynomial coefficients") from None
    kept = []
    for monom, coeff in poly.terms():
        if all(sum(e * s for e, s in zip(monom, w)) + sh == 0 for w, sh in zip(weights, shift)):
            kept.append(coeff * sp.prod([g ** e for g, e in zip(gens, monom)]))
    return sp.Add(*kept)


# ============================================================================
# FORMS
# ============================================================================

@dataclass(frozen=True)
class PolyOneForm:
    n: int
    coeffs: Tuple[sp.Expr, ...]

    def __post_init__(self):
        if len(self.coeffs) != 2 * self.n:
            raise InputError(f"a 1-form on C^{self.n} needs {2 * self.n} coefficients")
        object.__setattr__(self, "coeffs", tuple(sp.expand(sp.sympify(c)) for c in self.coeffs))

    @classmethod
    def zero(cls, n: int) -> "PolyOneForm":
        return cls(n, (sp.Integer(0),) * (2 * n))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __add__(self, other: "PolyOneForm") -> "PolyOneForm":
        return PolyOneForm(self.n, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "PolyOneForm") -> "PolyOneForm":
        return PolyOneForm(self.n, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def degree(self) -> int:
        u = real_symbols(self.n)
        return max((sp.Poly(c, *u).total_degree() for c in self.coeffs if c != 0), default=0)

    def d(self) -> "PolyTwoForm":
        u = real_symbols(self.n)
        size = 2 * self.n
        return PolyTwoForm(self.n, tuple(
            tuple(sp.diff(self.coeffs[b], u[a]) - sp.diff(self.coeffs[a], u[b]) for b in range(size))
            for a in range(size)
        ))

    def average(self, circles: Sequence[Sequence[int]]) -> "PolyOneForm":
        """Average over the torus whose circles act with the given weight rows."""
        weights = _weights_of(self.n, circles)
        C, Cinv = _basis_change(self.n)
        g = C.T * sp.Matrix([_to_complex(c, self.n) for c in self.coeffs])
        kept = sp.Matrix([_filter(g[c], self.n, weights, [w[c] for w in weights])
                          for c in range(2 * self.n)])
        f = Cinv.T * kept
        return PolyOneForm(self.n, tuple(_to_real(f[a], self.n) for a in range(2 * self.n)))

    def evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        return _compile(self.coeffs, self.n, (2 * self.n,))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.evaluator()(u)


@dataclass(frozen=True)
class PolyTwoForm:
    """Skew coefficient matrix: omega(v, w) = v^T M w."""

    n: int
    entries: Tuple[Tuple[sp.Expr, ...], ...]

    def __post_init__(self):
        size = 2 * self.n
        if len(self.entries) != size or any(len(r) != size for r in self.entries):
            raise InputError(f"a 2-form on C^{self.n} needs a {size}x{size} matrix")
        object.__setattr__(self, "entries", tuple(
            tuple(sp.expand(sp.sympify(x)) for x in r) for r in self.entries))

    @classmethod
    def zero(cls, n: int) -> "PolyTwoForm":
        return cls(n, tuple((sp.Integer(0),) * (2 * n) for _ in range(2 * n)))

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.entries for x in r)

    def matrix(self) -> sp.Matrix:
        return sp.Matrix(self.entries)

    def __add__(self, other: "PolyTwoForm") -> "PolyTwoForm":
        return PolyTwoForm(self.n, tuple(tuple(a + b for a, b in zip(r, s))
                                         for r, s in zip(self.entries, other.entries)))

    def __sub__(self, other: "PolyTwoForm") -> "PolyTwoForm":
        return PolyTwoForm(self.n, tuple(tuple(a - b for a, b in zip(r, s))
                                         for r, s in zip(self.entries, other.entries)))

    def is_skew(self) -> bool:
        size = 2 * self.n
        return all(sp.expand(self.entries[a][b] + self.entries[b][a]) == 0
                   for a in range(size) for b in range(size))

    def is_closed(self) -> bool:
        u = real_symbols(self.n)
        M = self.entries
        for a, b, c in itertools.combinations(range(2 * self.n), 3):
            cyclic = sp.diff(M[b][c], u[a]) + sp.diff(M[c][a], u[b]) + sp.diff(M[a][b], u[c])
            if sp.expand(cyclic) != 0:
                return False
        return True

    def average(self, circles: Sequence[Sequence[int]]) -> "PolyTwoForm":
        """Average over the torus whose circles act with the given weight rows."""
        weights = _weights_of(self.n, circles)
        C, Cinv = _basis_change(self.n)
        size = 2 * self.n
        N = C.T * sp.Matrix([[_to_complex(x, self.n) for x in r] for r in self.entries]) * C
        kept = sp.Matrix(size, size, lambda c, e: _filter(
            N[c, e], self.n, weights, [w[c] + w[e] for w in weights]))
        M = Cinv.T * kept * Cinv
        return PolyTwoForm(self.n, tuple(tuple(_to_real(M[a, b], self.n) for b in range(size))
                                         for a in range(size)))

    def radial_primitive(self, normal: Sequence[int]) -> PolyOneForm:
        """
        Fibrewise radial homotopy operator along the normal coordinates.

        alpha_b(u) = int_0^1 sum_{a normal} u_a M_ab(rho_t u) s_b(t) dt, where
        rho_t scales the normal coordinates by t and s_b = t on normal b,
        1 otherwise. d(alpha) = omega whenever omega is closed and vanishes on
        the fixed subspace.
        """
        u = real_symbols(self.n)
        real_normal = sorted({2 * j + e for j in normal for e in (0, 1)})
        scale = {u[a]: _T * u[a] for a in real_normal}
        coeffs = []
        for b in range(2 * self.n):
            s_b = _T if b in real_normal else sp.Integer(1)
            integrand = sum((u[a] * self.entries[a][b].xreplace(scale) for a in real_normal),
                            sp.Integer(0)) * s_b
            coeffs.append(sp.integrate(sp.expand(integrand), (_T, 0, 1)))
        return PolyOneForm(self.n, tuple(coeffs))

    def evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        flat = tuple(x for r in self.entries for x in r)
        return _compile(flat, self.n, (2 * self.n, 2 * self.n))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.evaluator()(u)


@lru_cache(maxsize=256)
def _compile(exprs: Tuple[sp.Expr, ...], n: int, shape: Tuple[int, ...]) -> Callable:
    u = real_symbols(n)
    fn = sp.lambdify(u, list(exprs), "numpy")

    def evaluate(point: np.ndarray) -> np.ndarray:
        values = fn(*np.asarray(point, dtype=float))
        return np.array([float(v) for v in values]).reshape(shape)

    return evaluate


# ============================================================================
# ADMISSIBLE PERTURBATIONS
# ============================================================================

@dataclass(frozen=True)
class PerturbationForm:
    """A polynomial 1-form eta and its exterior derivative."""

    eta: PolyOneForm
    d_eta: PolyTwoForm

    @classmethod
    def from_eta(cls, eta: PolyOneForm) -> "PerturbationForm":
        return cls(eta, eta.d())

    @classmethod
    def zero(cls, n: int) -> "PerturbationForm":
        return cls(PolyOneForm.zero(n), PolyTwoForm.zero(n))

    @property
    def n(self) -> int:
        return self.eta.n

    @property
    def degree(self) -> int:
        return self.eta.degree()


def radius_differential(n: int, j: int) -> PolyOneForm:
    """d|z_j|^2 = 2 x_j dx_j + 2 y_j dy_j."""
    u = real_symbols(n)
    coeffs = [sp.Integer(0)] * (2 * n)
    coeffs[2 * j] = 2 * u[2 * j]
    coeffs[2 * j + 1] = 2 * u[2 * j + 1]
    return PolyOneForm(n, tuple(coeffs))


Monomial = Tuple[Tuple[int, ...], Tuple[int, ...]]


def invariant_monomials(weights: Sequence[Sequence[int]], normal: Sequence[int],
                        degree: int, min_normal: int = 2) -> List[Monomial]:
    """
    Exponent pairs (alpha, beta) of z^alpha zbar^beta.

    Total degree `degree`, weight zero under every row, and at least
    `min_normal` factors from the normal coordinates.
    """
    n = len(weights[0])
    out = []
    for picks in itertools.combinations_with_replacement(range(2 * n), degree):
        exps = [picks.count(s) for s in range(2 * n)]
        alpha, beta = exps[0::2], exps[1::2]
        if any(sum(w[j] * (alpha[j] - beta[j]) for j in range(n)) for w in weights):
            continue
        if sum(alpha[j] + beta[j] for j in normal) < min_normal:
            continue
        out.append((tuple(alpha), tuple(beta)))
    return out


def horizontal_pairs(weights: Sequence[Sequence[int]], normal: Sequence[int],
                     degree: int) -> List[Tuple[Monomial, Monomial]]:
    """
    Monomial pairs (h, f) for the terms h df of an admissible perturbation.

    Both are nonconstant torus invariants. The coefficients of h df have
    degree deg h + deg f - 1 <= `degree`, and their order along the fixed
    subspace, ord h + ord f (one less when f has a normal factor), is at
    least two.
    """
    def order(mono):
        return sum(mono[0][j] + mono[1][j] for j in normal)

    by_degree = {d: invariant_monomials(weights, normal, d, min_normal=0) for d in range(1, degree + 1)}
    pairs = []
    for dh in range(1, degree + 1):
        for df in range(1, degree + 2 - dh):
            for h in by_degree[dh]:
                for f in by_degree.get(df, ()):
                    of = order(f)
                    if order(h) + of - (1 if of else 0) >= 2:
                        pairs.append((h, f))
    return pairs


@lru_cache(maxsize=4096)
def _monomial(n: int, mono: Monomial) -> sp.Expr:
    c = complex_symbols(n)
    alpha, beta = mono
    return _to_real(sp.prod([c[2 * i] ** alpha[i] * c[2 * i + 1] ** beta[i] for i in range(n)]), n)


def random_admissible_eta(weights: Sequence[Sequence[int]], normal: Sequence[int],
                          degree: int = 4, scale: Fraction = Fraction(1, 100),
                          seed: int = 0) -> PerturbationForm:
    """
    eta = Re sum c_hf h df over the pairs of `horizontal_pairs`.

    h and f are torus invariant, so eta is invariant and i_Y eta = 0 for
    every generator Y of the torus; its coefficients vanish to second order
    on the fixed subspace. Each c_hf = (a + ib)/100 * scale with a, b drawn
    from numpy's PCG64 seeded with `seed`.
    """
    if degree < 3:
        raise InputError("admissible perturbations have degree at least 3")
    n = len(weights[0])
    rng = np.random.default_rng(seed)
    u = real_symbols(n)
    scale = sp.Rational(Fraction(scale).numerator, Fraction(scale).denominator)
    pairs = horizontal_pairs(weights, normal, degree)

    coeffs = [sp.Integer(0)] * (2 * n)
    for h, f in pairs:
        re, im = (sp.Rational(int(k), 100) for k in rng.integers(-100, 101, size=2))
        H, F = _monomial(n, h), _monomial(n, f)
        c = scale * (re + sp.I * im) * H
        for a in range(2 * n):
            coeffs[a] += c * sp.diff(F, u[a])
    coeffs = [sp.expand(e) for e in coeffs]
    coeffs = [sp.expand((e + e.xreplace({sp.I: -sp.I})) / 2) for e in coeffs]
    logger.debug("admissible eta from %d invariant pairs", len(pairs))
    return PerturbationForm.from_eta(PolyOneForm(n, tuple(coeffs)))


def vanishes_to_second_order(form: PolyOneForm, normal: Sequence[int]) -> bool:
    """Value and first normal derivatives vanish where every normal coordinate is zero."""
    u = real_symbols(form.n)
    real_normal = [2 * j + e for j in normal for e in (0, 1)]
    zero = {u[a]: 0 for a in real_normal}
    for f in form.coeffs:
        if sp.expand(f.xreplace(zero)) != 0:
            return False
        if any(sp.expand(sp.diff(f, u[a]).xreplace(zero)) != 0 for a in real_normal):
            return False
    return True
