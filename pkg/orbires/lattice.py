"""
Exact integer linear algebra behind every isotropy computation.

Architecture:
- IntMatrix: immutable matrix of Python integers (no overflow, any shape)
- smith_normal_form: U·M·V = D with a deterministic pivot rule
- stabilizer / stabilizer_generators: isotropy subgroup of T^k at a coordinate support
- circle_isotropy_order / residues: single-circle helpers

Supports are collections of 0-based column indices here; the 1-based
numbering only appears in user-facing artifacts.
"""

import logging
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, List, Sequence, Tuple, Union

from .errors import InputError, PreconditionError

logger = logging.getLogger(__name__)

INFINITE = "infinite"

Order = Union[int, str]


# ============================================================================
# INTEGER MATRICES
# ============================================================================

@dataclass(frozen=True)
class IntMatrix:
    """A rows x cols matrix of arbitrary precision integers."""

    rows: int
    cols: int
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise InputError(f"negative matrix shape {self.rows}x{self.cols}")
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise InputError(f"entry grid does not match shape {self.rows}x{self.cols}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int = None) -> "IntMatrix":
        try:
            entries = tuple(tuple(operator.index(x) for x in row) for row in rows)
        except TypeError as exc:
            raise InputError(f"matrix entries must be integers: {exc}") from None
        if cols is None:
            cols = len(entries[0]) if entries else 0
        return cls(len(entries), cols, entries)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    def __getitem__(self, key: Tuple[int, int]) -> int:
        i, j = key
        return self.entries[i][j]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def row(self, i: int) -> Tuple[int, ...]:
        return self.entries[i]

    def column(self, j: int) -> Tuple[int, ...]:
        return tuple(r[j] for r in self.entries)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows,
                         tuple(self.column(j) for j in range(self.cols)))

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise InputError(f"cannot multiply {self.shape} by {other.shape}")
        cols = [other.column(j) for j in range(other.cols)]
        return IntMatrix(self.rows, other.cols, tuple(
            tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.entries
        ))

    def select_columns(self, indices: Iterable[int]) -> "IntMatrix":
        idx = list(indices)
        return IntMatrix(self.rows, len(idx),
                         tuple(tuple(r[j] for j in idx) for r in self.entries))

    def select_rows(self, indices: Iterable[int]) -> "IntMatrix":
        idx = list(indices)
        return IntMatrix(len(idx), self.cols, tuple(self.entries[i] for i in idx))

    def with_column(self, values: Sequence[int]) -> "IntMatrix":
        """Append one column."""
        if len(values) != self.rows:
            raise InputError("appended column has the wrong length")
        return IntMatrix(self.rows, self.cols + 1,
                         tuple(r + (int(v),) for r, v in zip(self.entries, values)))

    def with_row(self, values: Sequence[int]) -> "IntMatrix":
        """Append one row."""
        if len(values) != self.cols:
            raise InputError("appended row has the wrong length")
        return IntMatrix(self.rows + 1, self.cols,
                         self.entries + (tuple(int(v) for v in values),))

    def replace_row(self, i: int, values: Sequence[int]) -> "IntMatrix":
        rows = list(self.entries)
        rows[i] = tuple(int(v) for v in values)
        return IntMatrix(self.rows, self.cols, tuple(rows))

    def to_list(self) -> List[List[int]]:
        return [list(r) for r in self.entries]

    def determinant(self) -> int:
        """Fraction-free Bareiss elimination."""
        if self.rows != self.cols:
            raise InputError("determinant of a non-square matrix")
        n = self.rows
        a = self.to_list()
        sign, prev = 1, 1
        for t in range(n - 1):
            if a[t][t] == 0:
                swap = next((i for i in range(t + 1, n) if a[i][t]), None)
                if swap is None:
                    return 0
                a[t], a[swap] = a[swap], a[t]
                sign = -sign
            for i in range(t + 1, n):
                for j in range(t + 1, n):
                    a[i][j] = (a[i][j] * a[t][t] - a[i][t] * a[t][j]) // prev
            prev = a[t][t]
        return sign * a[n - 1][n - 1] if n else 1

    def rank(self) -> int:
        return sum(1 for d in smith_normal_form(self).diagonal() if d)


# ============================================================================
# SMITH NORMAL FORM
# ============================================================================

@dataclass(frozen=True)
class SNFDecomposition:
    """U·M·V = D with U, V unimodular and D diagonal in divisibility order."""

    U: IntMatrix
    D: IntMatrix
    V: IntMatrix

    def diagonal(self) -> Tuple[int, ...]:
        return tuple(self.D[i, i] for i in range(min(self.D.rows, self.D.cols)))

    def invariant_factors(self) -> Tuple[int, ...]:
        return tuple(d for d in self.diagonal() if d)


def _smallest_nonzero(a: List[List[int]], t: int):
    best = None
    for i in range(t, len(a)):
        for j in range(t, len(a[i])):
            x = a[i][j]
            if x and (best is None or abs(x) < best[0]):
                best = (abs(x), i, j)
    return None if best is None else best[1:]


def _add_row(a: List[List[int]], dst: int, src: int, q: int) -> None:
    ra, rb = a[dst], a[src]
    for j in range(len(ra)):
        ra[j] += q * rb[j]


def _add_col(a: List[List[int]], dst: int, src: int, q: int) -> None:
    for r in a:
        r[dst] += q * r[src]


def _swap_cols(a: List[List[int]], i: int, j: int) -> None:
    for r in a:
        r[i], r[j] = r[j], r[i]


def smith_normal_form(M: IntMatrix) -> SNFDecomposition:
    """
    Smith normal form by repeated smallest-pivot elimination.

    The pivot is the nonzero entry of least absolute value in the active
    submatrix, ties broken by lowest row then lowest column, so equal inputs
    always give equal (U, D, V).

    Args:
        M: any integer matrix, including zero and non-square ones.

    Returns:
        SNFDecomposition with U·M·V = D.
    """
    m, n = M.rows, M.cols
    a = M.to_list()
    u = IntMatrix.identity(m).to_list()
    v = IntMatrix.identity(n).to_list()

    for t in range(min(m, n)):
        while True:
            pivot = _smallest_nonzero(a, t)
            if pivot is None:
                break
            i, j = pivot
            if i != t:
                a[t], a[i] = a[i], a[t]
                u[t], u[i] = u[i], u[t]
            if j != t:
                _swap_cols(a, t, j)
                _swap_cols(v, t, j)
            p = a[t][t]

            clean = True
            for i in range(t + 1, m):
                q = a[i][t] // p
                if q:
                    _add_row(a, i, t, -q)
                    _add_row(u, i, t, -q)
                clean = clean and a[i][t] == 0
            for j in range(t + 1, n):
                q = a[t][j] // p
                if q:
                    _add_col(a, j, t, -q)
                    _add_col(v, j, t, -q)
                clean = clean and a[t][j] == 0
            if not clean:
                continue

            bad = next((i for i in range(t + 1, m)
                        if any(a[i][j] % p for j in range(t + 1, n))), None)
            if bad is None:
                break
            _add_row(a, t, bad, 1)
            _add_row(u, t, bad, 1)

        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]

    return SNFDecomposition(
        U=IntMatrix.from_rows(u, m),
        D=IntMatrix.from_rows(a, n),
        V=IntMatrix.from_rows(v, n),
    )


# ============================================================================
# ISOTROPY
# ============================================================================

@dataclass(frozen=True)
class StabilizerGroup:
    """T^rank x Z_{t1} x ... x Z_{tr}, torsion in divisibility order."""

    rank: int
    torsion: Tuple[int, ...] = ()

    @property
    def is_finite(self) -> bool:
        return self.rank == 0

    @property
    def is_trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    @property
    def order(self) -> Order:
        if self.rank:
            return INFINITE
        return reduce(operator.mul, self.torsion, 1)

    def label(self) -> str:
        parts = [f"T^{self.rank}"] if self.rank else []
        parts += [f"Z{d}" for d in self.torsion]
        return " x ".join(parts) if parts else "trivial"


def _checked_support(support: Iterable[int], n: int) -> Tuple[int, ...]:
    idx = tuple(sorted(set(support)))
    for j in idx:
        if not 0 <= j < n:
            raise InputError(f"support index {j + 1} out of range 1..{n}")
    return idx


def stabilizer(A: IntMatrix, support: Iterable[int]) -> StabilizerGroup:
    """
    Isotropy group {t in T^k : t^{A_j} = 1 for j in support}.

    Read off the Smith normal form of the column submatrix A_S: the rank is
    k - rank(A_S) and the torsion is the diagonal entries >= 2.
    """
    return _stabilizer(A, _checked_support(support, A.cols))


@lru_cache(maxsize=8192)
def _stabilizer(A: IntMatrix, idx: Tuple[int, ...]) -> StabilizerGroup:
    if not idx:
        return StabilizerGroup(rank=A.rows)
    diagonal = smith_normal_form(A.select_columns(idx)).diagonal()
    r = sum(1 for d in diagonal if d)
    return StabilizerGroup(rank=A.rows - r, torsion=tuple(d for d in diagonal if d >= 2))


def stabilizer_generators(A: IntMatrix, support: Iterable[int]) -> List[Tuple[Tuple[Fraction, ...], int]]:
    """
    Generators of a finite stabiliser as angle vectors in (Q/Z)^k.

    With U·A_S·V = D, the element U^T e_i / d_i generates the Z_{d_i} factor.

    Returns:
        list of (theta, order) with every theta_r in [0, 1).
    """
    idx = _checked_support(support, A.cols)
    if not idx:
        raise PreconditionError("the empty support has the whole torus as stabiliser")
    snf = smith_normal_form(A.select_columns(idx))
    diagonal = snf.diagonal()
    if sum(1 for d in diagonal if d) < A.rows:
        raise PreconditionError(f"stabiliser of support {[j + 1 for j in idx]} is not finite")
    gens = []
    for i, d in enumerate(diagonal):
        if d >= 2:
            theta = tuple(Fraction(x, d) % 1 for x in snf.U.row(i))
            gens.append((theta, d))
    return gens


def circle_isotropy_order(w: Sequence[int], support: Iterable[int]) -> Order:
    """gcd of the weights on the support, or INFINITE when they all vanish."""
    idx = _checked_support(support, len(w))
    if not idx:
        raise InputError("circle isotropy of the empty support is the whole circle")
    g = math.gcd(*(int(w[j]) for j in idx))
    return g if g else INFINITE


def residues(w: Sequence[int], m: int) -> Tuple[int, ...]:
    """Weights reduced into [0, m)."""
    if m < 2:
        raise InputError(f"residue modulus must be at least 2, got {m}")
    return tuple(int(x) % m for x in w)
