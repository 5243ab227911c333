"""
Linear presymplectic models P = mu^{-1}(nu) in C^N with a T^k action.

Architecture:
- TorusWeightModel: integer weights (k circles x N coordinates) + rational level
- Support / Stratum / SamplePoint value types
- realizable_supports: exact enumeration of the coordinate supports met by P
- validate_regular / enumerate_strata / minimal_stratum / orbifold_singular_supports
- sample_point: exact interior moduli, seeded phases

The moment map of row r is mu_r(z) = sum_j A[r][j] |z_j|^2, so a point with
moduli x_j = |z_j|^2 lies on P exactly when A x = nu.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError, PreconditionError
from .feasibility import LinearSystem
from .lattice import (
    INFINITE,
    IntMatrix,
    StabilizerGroup,
    circle_isotropy_order,
    stabilizer,
    stabilizer_generators,
)

logger = logging.getLogger(__name__)

SAMPLING_TOLERANCE = 1e-12


# ============================================================================
# VALUE TYPES
# ============================================================================

@dataclass(frozen=True)
class Support:
    """A set of 0-based coordinate indices, stored sorted."""

    indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(set(int(j) for j in self.indices))))

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Support":
        return cls(tuple(indices))

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, j: int) -> bool:
        return j in self.indices

    def __bool__(self) -> bool:
        return bool(self.indices)

    def issubset(self, other: "Support") -> bool:
        return set(self.indices) <= set(other.indices)

    def union(self, other: Iterable[int]) -> "Support":
        return Support(self.indices + tuple(other))

    def sort_key(self):
        return len(self.indices), self.indices

    def one_based(self) -> List[int]:
        return [j + 1 for j in self.indices]

    def display(self) -> str:
        return "{" + ",".join(str(j) for j in self.one_based()) + "}"


@dataclass(frozen=True)
class TorusWeightModel:
    """The level set of a linear torus moment map."""

    weights: IntMatrix
    level: Tuple[Fraction, ...]
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.weights.rows < 1 or self.weights.cols < 1:
            raise InputError(f"a model needs k >= 1 and N >= 1, got {self.weights.shape}")
        object.__setattr__(self, "level", tuple(Fraction(v) for v in self.level))
        if len(self.level) != self.weights.rows:
            raise InputError(f"level has {len(self.level)} entries for {self.weights.rows} rows")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
            if len(self.labels) != self.weights.cols:
                raise InputError(f"{len(self.labels)} labels for {self.weights.cols} coordinates")

    @classmethod
    def create(cls, weights: Sequence[Sequence[int]], level: Sequence,
               labels: Optional[Sequence[str]] = None) -> "TorusWeightModel":
        return cls(IntMatrix.from_rows(weights), tuple(Fraction(v) for v in level),
                   tuple(labels) if labels is not None else None)

    @property
    def k(self) -> int:
        return self.weights.rows

    @property
    def n(self) -> int:
        return self.weights.cols

    def row(self, r: int) -> Tuple[int, ...]:
        check_row(self, r)
        return self.weights.row(r)

    def all_supports(self) -> Iterable[Support]:
        for size in range(1, self.n + 1):
            for combo in itertools.combinations(range(self.n), size):
                yield Support(combo)

    def moment(self, coords: np.ndarray) -> np.ndarray:
        """Float moment map at complex coordinates."""
        A = np.array(self.weights.to_list(), dtype=float)
        return A @ (np.abs(np.asarray(coords)) ** 2)

    def exact_moment(self, moduli: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        return tuple(sum(a * x for a, x in zip(r, moduli)) for r in self.weights.entries)

    def level_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.level])


@dataclass(frozen=True)
class Stratum:
    """
    A Z_m isotropy stratum of one circle.

    `lift` holds integer coefficients c over every model row (c[row] = 1,
    zero off the rows involved) such that the isotropy generator acts on
    coordinate j with weight beta_j / m, beta = sum_i c_i A_i.
    """

    row: int
    order: int
    fixed_support: Support
    realizable: bool
    lift: Tuple[int, ...]
    beta: Tuple[int, ...]
    quotiented: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.order < 2:
            raise InputError(f"stratum order must be at least 2, got {self.order}")
        if any(self.beta[j] % self.order for j in self.fixed_support):
            raise InputError("stratum order must divide the weights on its fixed support")

    def normal_coordinates(self) -> Tuple[int, ...]:
        return tuple(j for j in range(len(self.beta)) if j not in self.fixed_support)


@dataclass(frozen=True, eq=False)
class SamplePoint:
    """A point of the level set with exact moduli behind its float coordinates."""

    coords: np.ndarray
    support: Support
    moduli: Tuple[Fraction, ...] = field(default=())

    @property
    def real(self) -> np.ndarray:
        """Real coordinates ordered (x_1, y_1, x_2, y_2, ...)."""
        return complex_to_real(self.coords)


def complex_to_real(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def real_to_complex(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u[0::2] + 1j * u[1::2]


def check_row(model: TorusWeightModel, row: int) -> None:
    if not 0 <= row < model.k:
        raise InputError(f"row {row + 1} out of range 1..{model.k}")


# ============================================================================
# EXACT FEASIBILITY ON SUPPORTS
# ============================================================================

def support_system(model: TorusWeightModel, support: Support, strict: bool = True,
                   extra: Sequence[Tuple[Sequence, Fraction, bool]] = ()) -> LinearSystem:
    """
    Moduli system over the coordinates of `support`.

    A_S x = nu with x > 0 (or x >= 0 for the closure). `extra` adds
    inequalities (coeffs over all N coordinates, rhs, strict).
    """
    idx = support.indices
    system = LinearSystem(len(idx))
    for r in range(model.k):
        system.add_equality([model.weights[r, j] for j in idx], model.level[r])
    for pos in range(len(idx)):
        system.add_inequality([int(p == pos) for p in range(len(idx))], 0, strict=strict)
    for coeffs, rhs, is_strict in extra:
        system.add_inequality([coeffs[j] for j in idx], rhs, strict=is_strict)
    return system


def origin_on_level(model: TorusWeightModel) -> bool:
    """The origin (empty support) lies on P exactly when nu = 0."""
    return not any(model.level)


def support_realizable(model: TorusWeightModel, support: Support) -> bool:
    """True iff the level set has a point whose nonzero coordinates are exactly `support`."""
    if not support:
        return origin_on_level(model)
    if support.indices[-1] >= model.n:
        raise InputError(f"support index {support.indices[-1] + 1} out of range 1..{model.n}")
    return support in realizable_supports(model)


@dataclass(frozen=True)
class Vertex:
    """A basic solution of A x = nu, x >= 0: k positive moduli on `basis`, zero elsewhere."""

    basis: Support
    moduli: Tuple[Fraction, ...]


@lru_cache(maxsize=512)
def level_vertices(model: TorusWeightModel) -> Optional[Tuple[Vertex, ...]]:
    """
    Vertices of the moduli polyhedron {x >= 0 : A x = nu}, all of them simple.

    Bases are screened with a batched float solve and confirmed exactly.
    Returns None when A has rank below k or some basic solution has a zero
    modulus; the vertices then do not determine the realizable supports.
    """
    k, n = model.k, model.n
    if k > n:
        return None
    A = np.array(model.weights.to_list(), dtype=float)
    combos = list(itertools.combinations(range(n), k))
    blocks = np.stack([A[:, list(c)] for c in combos])
    invertible = np.abs(np.linalg.det(blocks)) > 0.5
    if not invertible.any():
        return None
    chosen = [c for c, ok in zip(combos, invertible) if ok]
    rhs = np.broadcast_to(model.level_floats(), (len(chosen), k))[..., None]
    approx = np.linalg.solve(blocks[invertible], rhs)[..., 0]
    scale = 1.0 + np.max(np.abs(approx), axis=1)

    vertices = []
    for combo, x, size in zip(chosen, approx, scale):
        if x.min() < -1e-7 * size:
            continue
        system = LinearSystem(k)
        for r in range(k):
            system.add_equality([model.weights[r, j] for j in combo], model.level[r])
        exact = system.unique_solution()
        if exact is None or min(exact) < 0:
            continue
        if min(exact) == 0:
            logger.debug("degenerate basis %s", Support(combo).display())
            return None
        moduli = [Fraction(0)] * n
        for j, v in zip(combo, exact):
            moduli[j] = v
        vertices.append(Vertex(Support(combo), tuple(moduli)))
    return tuple(vertices)


def _supersets(vertices: Sequence[Vertex], n: int) -> Tuple[Support, ...]:
    found = set()
    for v in vertices:
        rest = [j for j in range(n) if j not in v.basis]
        for size in range(len(rest) + 1):
            for extra in itertools.combinations(rest, size):
                found.add(v.basis.union(extra))
    return tuple(sorted(found, key=Support.sort_key))


@lru_cache(maxsize=512)
def realizable_supports(model: TorusWeightModel) -> Tuple[Support, ...]:
    """
    Every realizable nonempty support, ordered by size then indices.

    When every vertex of the moduli polyhedron is simple, a support is
    realizable exactly when it contains a vertex basis. Otherwise each
    support is decided by Fourier-Motzkin.
    """
    vertices = level_vertices(model)
    if vertices is not None:
        found = _supersets(vertices, model.n)
    else:
        found = tuple(S for S in model.all_supports() if support_system(model, S).feasible())
    logger.debug("model %dx%d: %d realizable supports", model.k, model.n, len(found))
    return found


def moduli_point(model: TorusWeightModel, support: Support, rng) -> Tuple[Fraction, ...]:
    """Exact strictly positive moduli on `support`, zero elsewhere."""
    try:
        local = support_system(model, support).sample(rng)
    except PreconditionError:
        raise PreconditionError(f"support {support.display()} is not realizable") from None
    x = [Fraction(0)] * model.n
    for j, v in zip(support.indices, local):
        x[j] = v
    return tuple(x)


def sample_point(model: TorusWeightModel, support: Support, seed: int) -> SamplePoint:
    """
    Seeded point of the level set with support exactly `support`.

    Moduli come from an exact interior solution; phases are uniform draws
    from numpy's PCG64 generator seeded with `seed`.
    """
    rng = np.random.default_rng(seed)
    x = moduli_point(model, support, rng)
    return point_from_moduli(model, x, rng.uniform(0.0, 2 * np.pi, model.n), support)


def point_from_moduli(model: TorusWeightModel, moduli: Sequence[Fraction],
                      phases: np.ndarray, support: Optional[Support] = None) -> SamplePoint:
    radii = np.sqrt(np.array([float(v) for v in moduli]))
    coords = radii * np.exp(1j * np.asarray(phases))
    if support is None:
        support = Support.of(j for j, v in enumerate(moduli) if v)
    point = SamplePoint(coords=coords, support=support, moduli=tuple(Fraction(v) for v in moduli))
    gap = np.max(np.abs(model.moment(coords) - model.level_floats()))
    if gap > SAMPLING_TOLERANCE * max(1.0, float(np.max(np.abs(model.level_floats())))):
        raise PreconditionError(f"sample misses the level set by {gap:.3e}")
    return point


# ============================================================================
# REGULARITY AND STRATIFICATION
# ============================================================================

@dataclass(frozen=True)
class RegularityReport:
    passed: bool
    offending: Tuple[Tuple[Support, StabilizerGroup], ...]
    realizable_count: int

    @property
    def empty(self) -> bool:
        return self.realizable_count == 0


def validate_regular(model: TorusWeightModel) -> RegularityReport:
    """
    nu is regular iff every realizable support has a finite stabiliser.

    The origin counts as a realizable support when nu = 0; its stabiliser
    is the whole torus.
    """
    supports = realizable_supports(model)
    offending = []
    count = len(supports)
    if origin_on_level(model):
        offending.append((Support(()), stabilizer(model.weights, ())))
        count += 1
    for S in supports:
        group = stabilizer(model.weights, S)
        if not group.is_finite:
            offending.append((S, group))
    if offending:
        logger.info("model not regular: %s", ", ".join(S.display() for S, _ in offending))
    return RegularityReport(not offending, tuple(offending), count)


def _isotropy_lift(model: TorusWeightModel, rows: Sequence[int], support: Support,
                   order: int) -> Tuple[int, ...]:
    """Coefficients of the isotropy generator whose last-row angle is 1/order."""
    sub = model.weights.select_rows(rows)
    gens = stabilizer_generators(sub, support)
    target = Fraction(1, order)
    for counts in itertools.product(*(range(d) for _, d in gens)):
        theta = [sum((n * g[i] for n, (g, _) in zip(counts, gens)), Fraction(0)) % 1
                 for i in range(len(rows))]
        if theta[-1] == target:
            lift = [0] * model.k
            for r, t in zip(rows, theta):
                lift[r] = int(t * order) % order
            lift[rows[-1]] = 1
            return tuple(lift)
    raise PreconditionError(f"isotropy at {support.display()} is not cyclic over the active row")


def _staged_order(model: TorusWeightModel, row: int, quotiented: Sequence[int],
                  support: Support):
    if not quotiented:
        return circle_isotropy_order(model.weights.row(row), support)
    base = stabilizer(model.weights.select_rows(quotiented), support)
    if not base.is_trivial:
        raise PreconditionError(
            f"quotiented rows do not act freely at {support.display()} ({base.label()})")
    full = stabilizer(model.weights.select_rows(list(quotiented) + [row]), support)
    return full.order


def enumerate_strata(model: TorusWeightModel, row: int,
                     quotiented: Sequence[int] = ()) -> List[Stratum]:
    """
    Isotropy strata of circle `row` on the level set.

    With `quotiented` rows Q (acting freely) the order at a support S is
    |Stab(A_{Q+row}, S)| / |Stab(A_Q, S)|; with Q empty this is the gcd of
    the row's weights on S.

    Returns:
        strata sorted by descending order, then fixed support, then lift.
    """
    check_row(model, row)
    quotiented = tuple(quotiented)
    for q in quotiented:
        check_row(model, q)
    if row in quotiented:
        raise InputError(f"row {row + 1} cannot be both active and quotiented")

    supports = realizable_supports(model)
    rows = list(quotiented) + [row]
    keys = set()
    for S in supports:
        m = _staged_order(model, row, quotiented, S)
        if m == INFINITE:
            raise PreconditionError(f"row {row + 1} has infinite isotropy at {S.display()}; model not regular")
        if m < 2:
            continue
        lift = _isotropy_lift(model, rows, S, m) if quotiented else tuple(
            int(i == row) for i in range(model.k))
        keys.add((m, lift))

    strata = []
    for m, lift in keys:
        beta = tuple(sum(c * a for c, a in zip(lift, model.weights.column(j))) for j in range(model.n))
        fixed = Support.of(j for j in range(model.n) if beta[j] % m == 0)
        realizable = any(S.issubset(fixed) for S in supports)
        strata.append(Stratum(row=row, order=m, fixed_support=fixed, realizable=realizable,
                              lift=lift, beta=beta, quotiented=quotiented))
    strata.sort(key=lambda s: (-s.order, s.fixed_support.sort_key(), s.lift))
    return strata


def minimal_stratum(model: TorusWeightModel, row: int,
                    quotiented: Sequence[int] = ()) -> Optional[Stratum]:
    """The realizable stratum of maximal order, or None when the circle acts freely."""
    strata = [s for s in enumerate_strata(model, row, quotiented) if s.realizable]
    return strata[0] if strata else None


def orbifold_singular_supports(model: TorusWeightModel) -> List[Tuple[Support, StabilizerGroup]]:
    """Realizable supports whose full-torus stabiliser is finite and nontrivial."""
    singular = []
    for S in realizable_supports(model):
        group = stabilizer(model.weights, S)
        if not group.is_finite:
            raise PreconditionError(f"stabiliser at {S.display()} is {group.label()}; model not regular")
        if group.torsion:
            singular.append((S, group))
    return singular
