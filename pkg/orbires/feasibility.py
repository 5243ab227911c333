"""
Exact rational feasibility, minimisation and sampling for linear systems.

Architecture:
- LinearSystem collects equalities and (strict or non-strict) inequalities
- equalities are solved first by exact Gaussian elimination, leaving an
  inequality system over the free parameters
- Fourier-Motzkin elimination over Fractions decides feasibility, projects
  onto an objective for an exact infimum, and back-substitutes for an
  interior point

No floating point is involved anywhere in this module.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InputError, PreconditionError

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]


@dataclass(frozen=True)
class Constraint:
    """coeffs . x >= rhs, or > rhs when strict."""

    coeffs: Vector
    rhs: Fraction
    strict: bool = False

    def is_constant(self) -> bool:
        return not any(self.coeffs)

    def holds_trivially(self) -> bool:
        return Fraction(0) > self.rhs if self.strict else Fraction(0) >= self.rhs

    def evaluate(self, x: Sequence[Fraction]) -> bool:
        lhs = sum(c * v for c, v in zip(self.coeffs, x))
        return lhs > self.rhs if self.strict else lhs >= self.rhs


@dataclass(frozen=True)
class Bound:
    """Exact infimum of an objective; attained is False for a strict bound."""

    value: Fraction
    attained: bool


def _normalise(c: Constraint) -> Constraint:
    lead = next(abs(x) for x in c.coeffs if x)
    return Constraint(tuple(x / lead for x in c.coeffs), c.rhs / lead, c.strict)


def _tighten(constraints: Sequence[Constraint]) -> Optional[List[Constraint]]:
    """Drop duplicates and dominated rows; None signals a contradiction."""
    best: Dict[Vector, Constraint] = {}
    for c in constraints:
        if c.is_constant():
            if not c.holds_trivially():
                return None
            continue
        c = _normalise(c)
        old = best.get(c.coeffs)
        if old is None or c.rhs > old.rhs or (c.rhs == old.rhs and c.strict):
            best[c.coeffs] = c
    return [best[k] for k in sorted(best)]


def _eliminate(constraints: Sequence[Constraint], var: int) -> Optional[List[Constraint]]:
    lower, upper, rest = [], [], []
    for c in constraints:
        a = c.coeffs[var]
        if a > 0:
            lower.append(c)
        elif a < 0:
            upper.append(c)
        else:
            rest.append(c)
    for p in lower:
        for q in upper:
            sp, sq = 1 / p.coeffs[var], -1 / q.coeffs[var]
            rest.append(Constraint(
                tuple(sp * a + sq * b for a, b in zip(p.coeffs, q.coeffs)),
                sp * p.rhs + sq * q.rhs,
                p.strict or q.strict,
            ))
    return _tighten(rest)


def _interval(constraints: Sequence[Constraint], var: int, values: Dict[int, Fraction]):
    """Bounds on one variable once every later variable is fixed."""
    lo, lo_strict, hi, hi_strict = None, False, None, False
    for c in constraints:
        a = c.coeffs[var]
        if not a:
            continue
        slack = c.rhs - sum(x * values[j] for j, x in enumerate(c.coeffs) if j != var and x)
        b = slack / a
        if a > 0:
            if lo is None or b > lo or (b == lo and c.strict):
                lo, lo_strict = b, c.strict
        else:
            if hi is None or b < hi or (b == hi and c.strict):
                hi, hi_strict = b, c.strict
    return lo, lo_strict, hi, hi_strict


class LinearSystem:
    """
    Equalities plus inequalities over nvars rational unknowns.

    Example:
        >>> s = LinearSystem(2)
        >>> s.add_equality([1, 2], 1)
        >>> s.add_inequality([1, 0], 0, strict=True)
        >>> s.add_inequality([0, 1], 0, strict=True)
        >>> s.feasible()
        True
    """

    def __init__(self, nvars: int):
        if nvars < 0:
            raise InputError("a linear system needs a nonnegative number of unknowns")
        self.nvars = nvars
        self.equalities: List[Tuple[Vector, Fraction]] = []
        self.inequalities: List[Constraint] = []

    def _vector(self, coeffs: Sequence) -> Vector:
        if len(coeffs) != self.nvars:
            raise InputError(f"expected {self.nvars} coefficients, got {len(coeffs)}")
        return tuple(Fraction(c) for c in coeffs)

    def add_equality(self, coeffs: Sequence, rhs) -> None:
        self.equalities.append((self._vector(coeffs), Fraction(rhs)))

    def add_inequality(self, coeffs: Sequence, rhs, strict: bool = False) -> None:
        self.inequalities.append(Constraint(self._vector(coeffs), Fraction(rhs), strict))

    # ------------------------------------------------------------------
    # Equality elimination
    # ------------------------------------------------------------------

    def _parametrise(self):
        """
        Solve the equalities exactly.

        Returns:
            (affine, free) where x_i = affine[i][0] + affine[i][1] . t over the
            free parameters t, or None when the equalities are inconsistent.
        """
        rows = [list(c) + [r] for c, r in self.equalities]
        pivots: List[int] = []
        r = 0
        for col in range(self.nvars):
            p = next((i for i in range(r, len(rows)) if rows[i][col]), None)
            if p is None:
                continue
            rows[r], rows[p] = rows[p], rows[r]
            inv = 1 / rows[r][col]
            rows[r] = [x * inv for x in rows[r]]
            for i in range(len(rows)):
                if i != r and rows[i][col]:
                    f = rows[i][col]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
            pivots.append(col)
            r += 1
        if any(row[-1] for row in rows[r:]):
            return None

        free = [j for j in range(self.nvars) if j not in pivots]
        affine: List[Tuple[Fraction, Vector]] = [None] * self.nvars
        for j_index, j in enumerate(free):
            affine[j] = (Fraction(0), tuple(Fraction(int(k == j_index)) for k in range(len(free))))
        for i, col in enumerate(pivots):
            affine[col] = (rows[i][-1], tuple(-rows[i][f] for f in free))
        return affine, free

    def _reduced(self):
        param = self._parametrise()
        if param is None:
            return None
        affine, free = param
        reduced = []
        for c in self.inequalities:
            coeffs = [Fraction(0)] * len(free)
            rhs = c.rhs
            for a, (const, lin) in zip(c.coeffs, affine):
                if a:
                    rhs -= a * const
                    for k, x in enumerate(lin):
                        coeffs[k] += a * x
            reduced.append(Constraint(tuple(coeffs), rhs, c.strict))
        return affine, free, reduced

    def _stages(self, constraints: List[Constraint], nfree: int) -> Optional[List[List[Constraint]]]:
        stages = [_tighten(constraints)]
        if stages[0] is None:
            return None
        for var in range(nfree):
            nxt = _eliminate(stages[-1], var)
            if nxt is None:
                return None
            stages.append(nxt)
        return stages

    # ------------------------------------------------------------------
    # Public queries
    # ------------------------------------------------------------------

    def feasible(self) -> bool:
        reduced = self._reduced()
        if reduced is None:
            return False
        _, free, constraints = reduced
        return self._stages(constraints, len(free)) is not None

    def unique_solution(self) -> Optional[Vector]:
        """The single point solving the equalities, or None when there is not exactly one."""
        param = self._parametrise()
        if param is None or param[1]:
            return None
        return tuple(const for const, _ in param[0])

    def infimum(self, objective: Sequence) -> Optional[Bound]:
        """
        Exact infimum of objective . x over the solution set.

        Returns:
            Bound, or None when the objective is unbounded below.

        Raises:
            PreconditionError: if the system is infeasible.
        """
        obj = self._vector(objective)
        reduced = self._reduced()
        if reduced is None:
            raise PreconditionError("infimum over an infeasible system")
        affine, free, constraints = reduced
        const = sum(a * c for a, (c, _) in zip(obj, affine))
        lin = [sum(a * l[k] for a, (_, l) in zip(obj, affine)) for k in range(len(free))]

        if not any(lin):
            if self._stages(constraints, len(free)) is None:
                raise PreconditionError("infimum over an infeasible system")
            return Bound(const, True)

        # Substitute t_p = (z - const - sum_{k != p} lin_k t_k) / lin_p; z is the last unknown.
        p = next(k for k, x in enumerate(lin) if x)
        width = len(free) + 1
        lifted = []
        for c in constraints:
            f = c.coeffs[p] / lin[p]
            coeffs = [x - f * lin[k] if k != p else Fraction(0) for k, x in enumerate(c.coeffs)]
            coeffs.append(f)
            lifted.append(Constraint(tuple(coeffs), c.rhs + f * const, c.strict))
        stages = self._stages(lifted, width - 1)
        if stages is None:
            raise PreconditionError("infimum over an infeasible system")
        lo, lo_strict, hi, hi_strict = _interval(stages[-1], width - 1, {})
        if lo is not None and hi is not None and (lo > hi or (lo == hi and (lo_strict or hi_strict))):
            raise PreconditionError("infimum over an infeasible system")
        if lo is None:
            return None
        return Bound(lo, not lo_strict)

    def sample(self, rng) -> Tuple[Fraction, ...]:
        """
        A rational solution strictly inside every strict constraint.

        Args:
            rng: numpy Generator; each free parameter is placed at a random
                fraction k/64 (1 <= k <= 63) of its feasible interval.

        Raises:
            PreconditionError: if the system is infeasible.
        """
        reduced = self._reduced()
        if reduced is None:
            raise PreconditionError("no solution to sample")
        affine, free, constraints = reduced
        stages = self._stages(constraints, len(free))
        if stages is None:
            raise PreconditionError("no solution to sample")

        values: Dict[int, Fraction] = {}
        for var in reversed(range(len(free))):
            lo, lo_strict, hi, hi_strict = _interval(stages[var], var, values)
            frac = Fraction(int(rng.integers(1, 64)), 64)
            if lo is not None and hi is not None:
                values[var] = lo if lo == hi else lo + frac * (hi - lo)
            elif lo is not None:
                values[var] = lo + frac
            elif hi is not None:
                values[var] = hi - frac
            else:
                values[var] = frac
        t = [values[k] for k in range(len(free))]
        point = tuple(c + sum(a * b for a, b in zip(l, t)) for c, l in affine)
        if not all(c.evaluate(point) for c in self.inequalities):
            raise PreconditionError("back substitution left the feasible set")
        return point
