"""
Cut-and-collapse surgery on weight models, and the full resolution loop.

Architecture:
- phi_weights / tau_hat_row: the auxiliary circle and the free circle built from it
- choose_epsilon_delta: exact separation bound for the collar
- plan_step / apply_step / circle_resolution_step: one surgery
- resolve_circle / resolve_all: iterate until every circle acts freely
- replay / support_locality_violations / tau_hat_stabilizers: certificate checks

A surgery on a Z_m stratum H of circle `row` appends one coordinate w and
one row. The auxiliary circle phi acts with weights a_j (the residues of
beta_H off the fixed support, 0 on it, -m on w); tau_hat = (phi - beta_H)/m
acts freely and its level (eps - sum c_i nu_i)/m cuts out the collar
mu_phi >= eps, with |w|^2 = (mu_phi - eps)/m.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import (
    InputError,
    InvariantViolation,
    PreconditionError,
    ResolutionError,
    SeparationError,
)
from .lattice import StabilizerGroup, residues, stabilizer
from .model import (
    Stratum,
    Support,
    TorusWeightModel,
    check_row,
    enumerate_strata,
    level_vertices,
    orbifold_singular_supports,
    realizable_supports,
    support_realizable,
    support_system,
    validate_regular,
)

logger = logging.getLogger(__name__)

SURGERY = "surgery"
REPARAMETRISE = "reparametrise"
DEFAULT_STEP_CAP = 64

SingularSummary = Tuple[Tuple[Support, StabilizerGroup], ...]


# ============================================================================
# STEP RECORDS
# ============================================================================

@dataclass(frozen=True)
class PhiWeights:
    """Weights of the auxiliary circle; the last entry belongs to the appended coordinate."""

    weights: Tuple[int, ...]
    order: int
    fixed_support: Support

    def __post_init__(self):
        if self.weights[-1] != -self.order:
            raise InvariantViolation("appended phi weight must be -m")
        for j, a in enumerate(self.weights[:-1]):
            if (j in self.fixed_support) != (a == 0):
                raise InvariantViolation(f"phi weight {a} at coordinate {j + 1} breaks the fixed support")

    @property
    def normal(self) -> Tuple[int, ...]:
        """a_j on the original coordinates."""
        return self.weights[:-1]

    def mu_phi(self, moduli: Sequence) -> Fraction:
        return sum((Fraction(a) * Fraction(x) for a, x in zip(self.normal, moduli)), Fraction(0))


@dataclass(frozen=True)
class SurgeryStep:
    """
    One resolution step.

    For kind "surgery" the output appends coordinate `input_columns` and
    row `new_row` = tau_hat_row at new_level. For kind "reparametrise"
    the stratum fixes every coordinate and row `row` is replaced by
    beta/m at new_level.
    """

    kind: str
    row: int
    stratum: Stratum
    m: int
    new_level: Fraction
    new_row: int
    input_columns: int
    epsilon: Optional[Fraction] = None
    delta: Optional[Fraction] = None
    separation: Optional[Fraction] = None
    phi: Optional[PhiWeights] = None
    tau_hat_row: Optional[Tuple[int, ...]] = None
    replacement_row: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind == SURGERY:
            if not (0 < self.epsilon < self.delta):
                raise InvariantViolation("surgery needs 0 < epsilon < delta")
            if self.tau_hat_row[-1] != -1 or len(self.tau_hat_row) != self.input_columns + 1:
                raise InvariantViolation("tau_hat row must have length N+1 and end in -1")
        elif self.kind != REPARAMETRISE:
            raise InputError(f"unknown step kind: {self.kind}")


@dataclass(frozen=True)
class ResolutionCertificate:
    """
    The ordered steps of a resolution.

    summaries[i] is the singular summary before step i and summaries[i+1]
    the one after it, so consecutive steps share their boundary summary.
    """

    initial: TorusWeightModel
    steps: Tuple[SurgeryStep, ...]
    summaries: Tuple[SingularSummary, ...]
    final: TorusWeightModel

    def before(self, i: int) -> SingularSummary:
        return self.summaries[i]

    def after(self, i: int) -> SingularSummary:
        return self.summaries[i + 1]

    @property
    def is_empty(self) -> bool:
        return not self.steps


# ============================================================================
# EXACT CONSTRUCTION
# ============================================================================

def _require_maximal(model: TorusWeightModel, row: int, stratum: Stratum) -> None:
    check_row(model, row)
    if stratum.row != row:
        raise PreconditionError(f"stratum belongs to row {stratum.row + 1}, not {row + 1}")
    strata = [s for s in enumerate_strata(model, row, stratum.quotiented) if s.realizable]
    if not strata:
        raise PreconditionError(f"row {row + 1} acts freely; nothing to resolve")
    if strata[0].order != stratum.order:
        raise PreconditionError(
            f"stratum of order {stratum.order} is not maximal (max is {strata[0].order})")


def _phi(model: TorusWeightModel, stratum: Stratum) -> PhiWeights:
    m = stratum.order
    reduced = residues(stratum.beta, m)
    a = tuple(0 if j in stratum.fixed_support else reduced[j] for j in range(model.n))
    return PhiWeights(weights=a + (-m,), order=m, fixed_support=stratum.fixed_support)


def _tau_hat(phi: PhiWeights, stratum: Stratum) -> Tuple[int, ...]:
    m = stratum.order
    out = []
    for a, b in zip(phi.weights, stratum.beta + (0,)):
        if (a - b) % m:
            raise InvariantViolation(f"phi - beta entry {a - b} is not divisible by {m}")
        out.append((a - b) // m)
    return tuple(out)


def phi_weights(model: TorusWeightModel, row: int, stratum: Stratum) -> PhiWeights:
    """Residues of beta off the fixed support, 0 on it, -m on the new coordinate."""
    _require_maximal(model, row, stratum)
    return _phi(model, stratum)


def tau_hat_row(model: TorusWeightModel, row: int, stratum: Stratum) -> Tuple[int, ...]:
    """(a_j - beta_j)/m on the original coordinates, -1 on the new one."""
    return _tau_hat(phi_weights(model, row, stratum), stratum)


def _attached(support: Support, fixed: Support, supports: Sequence[Support]) -> bool:
    return any(T.issubset(support) and T.issubset(fixed) for T in supports)


def mu_phi_infimum(model: TorusWeightModel, support: Support, phi: PhiWeights):
    """Exact infimum of mu_phi over the closure of a support's face."""
    system = support_system(model, support, strict=False)
    return system.infimum([phi.normal[j] for j in support.indices])


def _face_minimum(model: TorusWeightModel, support: Support, phi: PhiWeights) -> Fraction:
    """Minimum of mu_phi (nonnegative on the moduli cone) over a face closure, read off its vertices."""
    vertices = level_vertices(model)
    if vertices is not None:
        values = [phi.mu_phi(v.moduli) for v in vertices if v.basis.issubset(support)]
        if values:
            return min(values)
    return mu_phi_infimum(model, support, phi).value


def separation_bound(model: TorusWeightModel, stratum: Stratum, phi: PhiWeights) -> Fraction:
    """
    Exact lower bound of mu_phi away from the stratum.

    The infimum of mu_phi over every realizable support that contains no
    realizable face inside the fixed subspace. Without such supports the
    bound is the supremum of mu_phi on the level set (1 if unbounded).
    """
    supports = realizable_supports(model)
    unattached = [S for S in supports if not _attached(S, stratum.fixed_support, supports)]
    if unattached:
        bound = min(_face_minimum(model, S, phi) for S in unattached)
        logger.debug("separation bound %s over %d unattached supports", bound, len(unattached))
        return bound
    negated = PhiWeights(tuple(-a for a in phi.normal) + (phi.weights[-1],), phi.order, phi.fixed_support)
    sups = [mu_phi_infimum(model, S, negated) for S in supports]
    if any(b is None for b in sups):
        return Fraction(1)
    return max(-b.value for b in sups)


def _epsilon_delta(model: TorusWeightModel, stratum: Stratum, phi: PhiWeights,
                   epsilon, delta) -> Tuple[Fraction, Fraction, Fraction]:
    if not stratum.realizable:
        raise PreconditionError("stratum does not meet the level set")
    bound = separation_bound(model, stratum, phi)
    if bound <= 0:
        raise SeparationError(diagnostics={"bound": str(bound)})

    eps = Fraction(epsilon) if epsilon is not None else None
    dlt = Fraction(delta) if delta is not None else None
    if eps is None and dlt is None:
        dlt = bound / 2
        eps = dlt / 2
    elif dlt is None:
        dlt = (eps + bound) / 2
    elif eps is None:
        eps = dlt / 2

    if not (0 < eps < dlt):
        raise InputError(f"need 0 < epsilon < delta, got epsilon={eps}, delta={dlt}")
    if eps >= bound or dlt > bound:
        raise SeparationError(diagnostics={"bound": str(bound), "epsilon": str(eps), "delta": str(dlt)})
    return eps, dlt, bound


def choose_epsilon_delta(model: TorusWeightModel, row: int, stratum: Stratum,
                         epsilon: Optional[Fraction] = None,
                         delta: Optional[Fraction] = None) -> Tuple[Fraction, Fraction, Fraction]:
    """
    Collar parameters 0 < eps < delta <= bound.

    Defaults are delta = bound/2 and eps = delta/2. A lone eps gets
    delta = (eps + bound)/2; a lone delta gets eps = delta/2.

    Returns:
        (epsilon, delta, bound)
    """
    return _epsilon_delta(model, stratum, phi_weights(model, row, stratum), epsilon, delta)


def plan_step(model: TorusWeightModel, stratum: Stratum, epsilon: Optional[Fraction] = None,
              delta: Optional[Fraction] = None, checked: bool = False) -> SurgeryStep:
    """
    Exact data of the step that removes `stratum`.

    `checked` skips the maximality test when the caller has just taken
    the stratum from enumerate_strata.
    """
    row, m = stratum.row, stratum.order
    if not checked:
        _require_maximal(model, row, stratum)
    lifted_level = sum((c * v for c, v in zip(stratum.lift, model.level)), Fraction(0))

    if len(stratum.fixed_support) == model.n:
        replacement = tuple(b // m for b in stratum.beta)
        logger.info("row %d: Z%d fixes every coordinate, reparametrising", row + 1, m)
        return SurgeryStep(kind=REPARAMETRISE, row=row, stratum=stratum, m=m,
                           new_level=lifted_level / m, new_row=row, input_columns=model.n,
                           replacement_row=replacement)

    phi = _phi(model, stratum)
    tau = _tau_hat(phi, stratum)
    eps, dlt, bound = _epsilon_delta(model, stratum, phi, epsilon, delta)
    logger.info("row %d: Z%d surgery on %s with eps=%s delta=%s",
                row + 1, m, stratum.fixed_support.display(), eps, dlt)
    return SurgeryStep(kind=SURGERY, row=row, stratum=stratum, m=m,
                       new_level=(eps - lifted_level) / m, new_row=model.k,
                       input_columns=model.n, epsilon=eps, delta=dlt, separation=bound,
                       phi=phi, tau_hat_row=tau)


def apply_step(model: TorusWeightModel, step: SurgeryStep) -> TorusWeightModel:
    """The output model of a planned step; no validation."""
    if model.n != step.input_columns:
        raise PreconditionError("step was planned for a model of a different size")
    if step.kind == REPARAMETRISE:
        level = list(model.level)
        level[step.row] = step.new_level
        return TorusWeightModel(model.weights.replace_row(step.row, step.replacement_row),
                                tuple(level), model.labels)
    weights = model.weights.with_column([0] * model.k).with_row(step.tau_hat_row)
    labels = model.labels + (f"e{model.n + 1}",) if model.labels else None
    return TorusWeightModel(weights, model.level + (step.new_level,), labels)


def _check_output(model: TorusWeightModel, step: SurgeryStep, out: TorusWeightModel) -> None:
    """
    The output is regular, the removed stratum is gone and no larger order appeared.

    Progress on a row is the pair (top order, number of top-order strata),
    which _circle_steps requires to drop lexicographically; the order alone
    may repeat. Weights (2, 3) take three staged steps with orders 3, 2, 2.
    """
    report = validate_regular(out)
    if not report.passed:
        raise ResolutionError(
            f"surgery output is not regular (epsilon={step.epsilon})",
            {"offending": [S.display() for S, _ in report.offending]},
        )
    quotiented = step.stratum.quotiented
    if step.kind == SURGERY:
        quotiented = quotiented + (step.new_row,)
    strata = [s for s in enumerate_strata(out, step.row, quotiented) if s.realizable]
    top = strata[0].order if strata else 1
    lift = step.stratum.lift + ((0,) if step.kind == SURGERY else ())
    if any(s.order == step.m and s.lift == lift for s in strata) or top > step.m \
            or (not step.stratum.quotiented and top >= step.m):
        raise ResolutionError(
            f"row {step.row + 1} still has isotropy of order {top} after the step",
            {"strata": [(s.order, s.fixed_support.display()) for s in strata]},
        )


def circle_resolution_step(model: TorusWeightModel, row: int, stratum: Stratum,
                           epsilon: Optional[Fraction] = None) -> TorusWeightModel:
    """One validated surgery on the maximal stratum of `row`."""
    _require_maximal(model, row, stratum)
    step = plan_step(model, stratum, epsilon, checked=True)
    out = apply_step(model, step)
    _check_output(model, step, out)
    return out


# ============================================================================
# RESOLUTION LOOP
# ============================================================================

def _circle_steps(model: TorusWeightModel, row: int, quotiented: List[int],
                  epsilon, delta, step_cap: int) -> Iterator[Tuple[SurgeryStep, TorusWeightModel]]:
    """
    Yield (step, output) until `row` acts freely; appends tau_hat rows to `quotiented`.

    Raises ResolutionError unless (top order, count of top-order strata)
    strictly decreases from one step to the next.
    """
    previous = None
    taken = 0
    while True:
        strata = [s for s in enumerate_strata(model, row, quotiented) if s.realizable]
        if not strata:
            return
        top = strata[0].order
        progress = (top, sum(1 for s in strata if s.order == top))
        if previous is not None and not progress < previous:
            raise ResolutionError(f"no progress on row {row + 1}", {"progress": list(progress)})
        if taken >= step_cap:
            raise ResolutionError(f"step cap {step_cap} reached on row {row + 1}")
        previous = progress

        step = plan_step(model, strata[0], epsilon, delta, checked=True)
        out = apply_step(model, step)
        _check_output(model, step, out)
        if step.kind == SURGERY:
            quotiented.append(step.new_row)
        taken += 1
        model = out
        yield step, out


def resolve_circle(model: TorusWeightModel, row: int, quotiented: Sequence[int] = (),
                   epsilon: Optional[Fraction] = None, delta: Optional[Fraction] = None,
                   step_cap: int = DEFAULT_STEP_CAP) -> Tuple[TorusWeightModel, List[SurgeryStep]]:
    """Resolve one circle until it acts freely (relative to `quotiented`)."""
    check_row(model, row)
    report = validate_regular(model)
    if not report.passed:
        raise PreconditionError("model is not regular")
    steps = []
    for step, out in _circle_steps(model, row, list(quotiented), epsilon, delta, step_cap):
        steps.append(step)
        model = out
    return model, steps


def resolve_all(model: TorusWeightModel, epsilon: Optional[Fraction] = None,
                delta: Optional[Fraction] = None,
                step_cap: int = DEFAULT_STEP_CAP) -> ResolutionCertificate:
    """
    Resolve every circle in row order, then the appended rows.

    Each appended tau_hat row joins the quotiented set at once and each
    original row joins it once it acts freely, so the final torus acts
    freely on the level set.
    """
    report = validate_regular(model)
    if not report.passed:
        raise PreconditionError(
            "model is not regular: " + ", ".join(S.display() for S, _ in report.offending))

    initial = model
    steps: List[SurgeryStep] = []
    summaries: List[SingularSummary] = [tuple(orbifold_singular_supports(model))]
    quotiented: List[int] = []
    original = model.k

    def run(row: int, rows: List[int]) -> None:
        nonlocal model
        for step, out in _circle_steps(model, row, rows, epsilon, delta, step_cap - len(steps)):
            steps.append(step)
            summaries.append(tuple(orbifold_singular_supports(out)))
            model = out

    for row in range(original):
        run(row, quotiented)
        quotiented.append(row)

    for row in range(original, model.k):
        others = [q for q in range(model.k) if q != row]
        run(row, others)

    leftover = orbifold_singular_supports(model)
    if leftover:
        raise ResolutionError("resolution finished with singular supports left",
                              {"singular": [S.display() for S, _ in leftover]})
    logger.info("resolved %dx%d model in %d steps", initial.k, initial.n, len(steps))
    return ResolutionCertificate(initial, tuple(steps), tuple(summaries), model)


# ============================================================================
# CERTIFICATE CHECKS
# ============================================================================

def replay(certificate: ResolutionCertificate) -> List[TorusWeightModel]:
    """Every model of the certificate, initial first, rebuilt from the steps."""
    models = [certificate.initial]
    for step in certificate.steps:
        models.append(apply_step(models[-1], step))
    if models[-1] != certificate.final:
        raise ResolutionError("replayed steps do not reproduce the final model")
    return models


def tau_hat_stabilizers(step: SurgeryStep, out: TorusWeightModel) -> List[Tuple[Support, StabilizerGroup]]:
    """Nontrivial stabilisers of the appended circle alone on the output (should be empty)."""
    bad = []
    circle = out.weights.select_rows([step.new_row])
    for S in realizable_supports(out):
        group = stabilizer(circle, S)
        if not group.is_trivial:
            bad.append((S, group))
    return bad


def support_locality_violations(model: TorusWeightModel, step: SurgeryStep,
                                out: TorusWeightModel) -> List[Support]:
    """
    Input supports far from the stratum that lost their isotropy data.

    Each realizable support whose exact mu_phi infimum is at least delta
    must reappear as S + {new coordinate} with the same stabiliser.
    """
    if step.kind != SURGERY:
        return []
    bad = []
    for S in realizable_supports(model):
        inf = mu_phi_infimum(model, S, step.phi)
        if inf is None or inf.value < step.delta:
            continue
        twin = S.union([step.input_columns])
        if not support_realizable(out, twin) or \
                stabilizer(out.weights, twin) != stabilizer(model.weights, S):
            bad.append(S)
    return bad
