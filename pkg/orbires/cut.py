"""
Symplectic cutting of a Hamiltonian circle action, and resolution of the cut.

Architecture:
- HamiltonianModel: a weight model whose row `ham_row` is the Hamiltonian
  circle K (not a quotient circle); the remaining rows cut out M
- symplectic_cut: append one coordinate and the cut row (ham weights, -+1)
  at level a; K survives as ham_weights extended by 0
- cut_and_resolve: resolve the cut model and check that isotropy away from
  the cut hypersurface is untouched
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import CutError, InputError
from .lattice import IntMatrix, StabilizerGroup, stabilizer
from .model import (
    Support,
    TorusWeightModel,
    check_row,
    orbifold_singular_supports,
    realizable_supports,
    support_realizable,
    support_system,
    validate_regular,
)
from .resolve import DEFAULT_STEP_CAP, SURGERY, ResolutionCertificate, resolve_all

logger = logging.getLogger(__name__)

BELOW = "below"
ABOVE = "above"
SIDE_SIGNS = {BELOW: 1, ABOVE: -1}


@dataclass(frozen=True)
class HamiltonianModel:
    """M = level set of the rows other than ham_row, with h = sum_j w_j |z_j|^2."""

    base: TorusWeightModel
    ham_row: int

    def __post_init__(self):
        check_row(self.base, self.ham_row)

    @property
    def hamiltonian(self) -> Tuple[int, ...]:
        return self.base.weights.row(self.ham_row)

    @property
    def quotient_rows(self) -> List[int]:
        return [r for r in range(self.base.k) if r != self.ham_row]


@dataclass(frozen=True)
class CutResult:
    side: str
    cut_model: TorusWeightModel
    cut_value: Fraction
    ham_weights: Tuple[int, ...]
    hypersurface_singularities: Tuple[Tuple[Support, StabilizerGroup], ...]

    @property
    def new_coordinate(self) -> int:
        return self.cut_model.n - 1

    @property
    def sign(self) -> int:
        return SIDE_SIGNS[self.side]


@dataclass(frozen=True)
class CutResolution:
    cut: CutResult
    certificate: ResolutionCertificate
    ham_weights: Tuple[int, ...]
    margin: Fraction
    locality_violations: Tuple[Support, ...]


def symplectic_cut(hmodel: HamiltonianModel, a, side: str) -> CutResult:
    """
    Cut M at h = a.

    below: h + |w|^2 = a keeps {h <= a}; above: h - |w|^2 = a keeps {h >= a}.
    """
    if side not in SIDE_SIGNS:
        raise InputError(f"cut side must be 'below' or 'above', got {side!r}")
    a = Fraction(a)
    base = hmodel.base
    rows = [base.weights.row(r) + (0,) for r in hmodel.quotient_rows]
    rows.append(hmodel.hamiltonian + (SIDE_SIGNS[side],))
    level = tuple(base.level[r] for r in hmodel.quotient_rows) + (a,)
    labels = base.labels + ("w",) if base.labels else None
    cut_model = TorusWeightModel(IntMatrix.from_rows(rows), level, labels)

    report = validate_regular(cut_model)
    if report.empty:
        raise CutError("empty cut")
    if not report.passed:
        raise CutError(
            f"cut value {a} is not a regular value",
            [(S.display(), G.label()) for S, G in report.offending],
        )

    new = cut_model.n - 1
    hyper = tuple((S, G) for S, G in orbifold_singular_supports(cut_model) if new not in S)
    logger.info("cut %s at %s: %d hypersurface singularities", side, a, len(hyper))
    return CutResult(side=side, cut_model=cut_model, cut_value=a,
                     ham_weights=hmodel.hamiltonian + (0,),
                     hypersurface_singularities=hyper)


def reaches_beyond(cut: CutResult, support: Support, margin: Fraction) -> bool:
    """Whether a support has points with |w|^2 = +-(h - a) > margin."""
    new = cut.new_coordinate
    if new not in support:
        return False
    coeffs = [int(j == new) for j in range(cut.cut_model.n)]
    return support_system(cut.cut_model, support, extra=[(coeffs, margin, True)]).feasible()


def cut_and_resolve(hmodel: HamiltonianModel, a, side: str,
                    epsilon: Optional[Fraction] = None, delta: Optional[Fraction] = None,
                    step_cap: int = DEFAULT_STEP_CAP) -> CutResolution:
    """
    Resolve the cut orbifold with K untouched.

    K is never a quotient row of the cut model, so surgeries only ever use
    the cut row and the rows they append. The margin is the largest
    surgery epsilon; every support reaching |w|^2 > margin must keep its
    stabiliser on S + {appended coordinates}.
    """
    cut = symplectic_cut(hmodel, a, side)
    certificate = resolve_all(cut.cut_model, epsilon, delta, step_cap)
    final = certificate.final
    appended = list(range(cut.cut_model.n, final.n))
    ham_weights = cut.ham_weights + (0,) * len(appended)

    margin = max((s.epsilon for s in certificate.steps if s.kind == SURGERY), default=Fraction(0))
    violations = []
    for S in realizable_supports(cut.cut_model):
        if not reaches_beyond(cut, S, margin):
            continue
        twin = S.union(appended)
        if not support_realizable(final, twin) or \
                stabilizer(final.weights, twin) != stabilizer(cut.cut_model.weights, S):
            violations.append(S)
    if violations:
        logger.warning("cut resolution changed isotropy at %s",
                       ", ".join(S.display() for S in violations))
    return CutResolution(cut, certificate, ham_weights, margin, tuple(violations))
