"""
Floating-point verification of the surgery at sampled points.

Architecture:
- geometry helpers: standard form, torus generators, tangent bases (numpy SVD)
- per-point checks returning CheckReport: kernel rank, Morse-Bott structure of
  mu_phi, positivity, collar lift, collapse continuity, phi averaging, the
  pointwise Moser system, staged stabilisers, cut embedding
- run_suites: drive the checks over a resolution certificate

Real coordinates are ordered (x_1, y_1, ..., x_N, y_N). The standard form is
omega_0 = sum_j 2 dy_j ^ dx_j, so a circle with weights w has generator
w_j (-y_j, x_j) and moment sum_j w_j |z_j|^2.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError, InvariantViolation, MoserError, PreconditionError
from .forms import PerturbationForm, PolyOneForm, PolyTwoForm, random_admissible_eta, vanishes_to_second_order
from .lattice import INFINITE, IntMatrix, smith_normal_form, stabilizer
from .model import (
    SamplePoint,
    Support,
    TorusWeightModel,
    complex_to_real,
    moduli_point,
    point_from_moduli,
    realizable_supports,
    real_to_complex,
    sample_point,
)
from .resolve import (
    SURGERY,
    ResolutionCertificate,
    SurgeryStep,
    apply_step,
    replay,
    support_locality_violations,
    tau_hat_stabilizers,
)

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

SUITES = ("kernel", "morse", "collar", "moser", "stage")


# ============================================================================
# REPORT TYPES
# ============================================================================

@dataclass(frozen=True)
class Tolerance:
    rank_gap_low: float = 1e-9
    rank_gap_high: float = 1e-6
    residual: float = 1e-8
    fd_step: float = 1e-5
    constraint: float = 1e-12

    def __post_init__(self):
        for name in ("rank_gap_low", "rank_gap_high", "residual", "fd_step", "constraint"):
            if not getattr(self, name) > 0:
                raise InputError(f"tolerance {name} must be positive")
        if self.rank_gap_low >= self.rank_gap_high:
            raise InputError("rank_gap_low must be below rank_gap_high")


@dataclass
class CheckReport:
    """Verdict of one check, with the residuals behind it."""

    check: str
    formula: str
    status: str
    residuals: List[float] = field(default_factory=list)
    samples: int = 0
    seed: Optional[int] = None
    details: Dict[str, object] = field(default_factory=dict)
    witnesses: List[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(max(self.residuals)) if self.residuals else 0.0

    @property
    def median_residual(self) -> float:
        return float(np.median(self.residuals)) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        return self.status == PASS


def worst_status(statuses: Iterable[str]) -> str:
    statuses = list(statuses)
    if FAIL in statuses:
        return FAIL
    if INCONCLUSIVE in statuses:
        return INCONCLUSIVE
    return PASS


def combine(check: str, formula: str, reports: Sequence[CheckReport],
            seed: Optional[int] = None) -> CheckReport:
    """Fold per-point reports into one."""
    details: Dict[str, object] = {}
    for r in reports:
        for key, value in r.details.items():
            if isinstance(value, float):
                details[key] = max(details.get(key, 0.0), value)
    return CheckReport(
        check=check, formula=formula,
        status=worst_status(r.status for r in reports),
        residuals=[r.max_residual for r in reports],
        samples=sum(r.samples for r in reports), seed=seed, details=details,
        witnesses=sorted({w for r in reports for w in r.witnesses}),
    )


@dataclass
class VerificationReport:
    checks: List[CheckReport]

    def __post_init__(self):
        self.checks = sorted(self.checks, key=lambda c: c.check)

    @property
    def status(self) -> str:
        return worst_status(c.status for c in self.checks)


@dataclass(frozen=True, eq=False)
class FormValue:
    """A 2-form at a point: omega(v, w) = v^T M w."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise InputError(f"a form value needs an even square matrix, got {m.shape}")
        object.__setattr__(self, "matrix", 0.5 * (m - m.T))

    @classmethod
    def standard(cls, n: int) -> "FormValue":
        return cls(standard_form(n))

    def __call__(self, v: np.ndarray, w: np.ndarray) -> float:
        return float(v @ self.matrix @ w)

    def restrict(self, basis: np.ndarray) -> np.ndarray:
        return basis.T @ self.matrix @ basis


# ============================================================================
# GEOMETRY
# ============================================================================

def standard_form(n: int) -> np.ndarray:
    omega = np.zeros((2 * n, 2 * n))
    for j in range(n):
        omega[2 * j + 1, 2 * j] = 2.0
        omega[2 * j, 2 * j + 1] = -2.0
    return omega


def generator_matrix(weights: Sequence[int]) -> np.ndarray:
    """K with Y(u) = K u for the circle acting with the given weights."""
    n = len(weights)
    K = np.zeros((2 * n, 2 * n))
    for j, w in enumerate(weights):
        K[2 * j, 2 * j + 1] = -w
        K[2 * j + 1, 2 * j] = w
    return K


def rotation(weights: Sequence[float], angle: float) -> np.ndarray:
    """exp(angle K): z_j -> exp(i w_j angle) z_j in real coordinates."""
    n = len(weights)
    R = np.zeros((2 * n, 2 * n))
    for j, w in enumerate(weights):
        c, s = math.cos(w * angle), math.sin(w * angle)
        R[2 * j:2 * j + 2, 2 * j:2 * j + 2] = [[c, -s], [s, c]]
    return R


def _weights(model: TorusWeightModel) -> np.ndarray:
    return np.array(model.weights.to_list(), dtype=float)


def moment_differential(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Rows d(mu_r) = sum_j 2 A_rj (x_j dx_j + y_j dy_j)."""
    return 2.0 * np.repeat(A, 2, axis=1) * u[None, :]


def tangent_basis(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ker d(mu) at u, as columns (2N x (2N - k))."""
    J = moment_differential(A, u)
    _, _, vt = np.linalg.svd(J)
    return vt[A.shape[0]:].T


def generators(A: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.column_stack([generator_matrix(row) @ u for row in A])


def sample_points(model: TorusWeightModel, count: int, seed: int) -> List[SamplePoint]:
    """`count` points cycling through every realizable support."""
    supports = realizable_supports(model)
    if not supports:
        raise PreconditionError("the level set is empty")
    return [sample_point(model, supports[i % len(supports)], seed + i) for i in range(count)]


# ============================================================================
# KERNEL RANK
# ============================================================================

def kernel_rank_check(model: TorusWeightModel, point: SamplePoint, tol: Tolerance) -> CheckReport:
    """omega_0 restricted to T(mu^-1(nu)) has exactly k null directions, spanned by the generators."""
    u = point.real
    A = _weights(model)
    omega = standard_form(model.n)
    W = tangent_basis(A, u)
    sv = np.linalg.svd(W.T @ omega @ W, compute_uv=False)
    small = int(np.sum(sv < tol.rank_gap_low))
    large = int(np.sum(sv > tol.rank_gap_high))

    J = moment_differential(A, u)
    residual = 0.0
    for Y in generators(A, u).T:
        residual = max(residual, float(np.max(np.abs(J @ Y))), float(np.max(np.abs(Y @ omega @ W))))

    if small + large != sv.size:
        status = INCONCLUSIVE
    elif small == model.k and residual <= tol.residual:
        status = PASS
    else:
        status = FAIL
    return CheckReport(
        check="kernel_rank", formula="ker_omega_span_Y", status=status, residuals=[residual],
        samples=1, details={"tangent_dim": W.shape[1], "kernel_dim": small},
        witnesses=[] if status == PASS else [point.support.display()],
    )


# ============================================================================
# MORSE-BOTT AND POSITIVITY
# ============================================================================

def _surgery(step: SurgeryStep) -> SurgeryStep:
    if step.kind != SURGERY:
        raise PreconditionError("a reparametrisation step has no collar")
    return step


def _coords(point) -> np.ndarray:
    return np.asarray(point.coords if isinstance(point, SamplePoint) else point, dtype=complex)


def mu_phi_value(step: SurgeryStep, point) -> float:
    """mu_phi(z) = sum_j a_j |z_j|^2 over the input coordinates."""
    a = np.array(_surgery(step).phi.normal, dtype=float)
    z = _coords(point)[:a.size]
    return float(a @ (np.abs(z) ** 2))


def fibre_hessian(step: SurgeryStep) -> Tuple[int, ...]:
    """Closed-form fibre Hessian eigenvalues of mu_phi: 2 a_j, once per real normal coordinate."""
    phi = _surgery(step).phi
    return tuple(2 * phi.normal[j] for j in step.stratum.normal_coordinates() for _ in (0, 1))


def _real_normal(step: SurgeryStep) -> List[int]:
    return [2 * j + e for j in step.stratum.normal_coordinates() for e in (0, 1)]


def morse_bott_check(step: SurgeryStep, samples: Sequence[SamplePoint], tol: Tolerance) -> CheckReport:
    """
    mu_phi is a Morse-Bott function with the fixed subspace as minimum.

    Per point: mu_phi >= min(a) |z_normal|^2, the finite-difference Hessian
    of d(mu_phi) = i_{Y_phi} omega_0 over the normal coordinates matches the
    closed form and is positive definite, and the radial derivative is 2 mu_phi.
    """
    phi = _surgery(step).phi
    n = step.input_columns
    a = np.array(phi.normal, dtype=float)
    normal = list(step.stratum.normal_coordinates())
    real_normal = _real_normal(step)
    K, omega = generator_matrix(phi.normal), standard_form(n)
    expected = np.sort(np.array(fibre_hessian(step), dtype=float))
    h = tol.fd_step

    def mu(u: np.ndarray) -> float:
        return float(a @ (u[0::2] ** 2 + u[1::2] ** 2))

    def grad(u: np.ndarray) -> np.ndarray:
        return (K @ u) @ omega

    reports = []
    for point in samples:
        u = point.real[:2 * n]
        value = mu(u)
        spread = float(np.sum(np.abs(_coords(point)[normal]) ** 2))
        floor_gap = max(0.0, float(a[normal].min()) * spread - value) if normal else 0.0

        H = np.zeros((len(real_normal), len(real_normal)))
        for col, b in enumerate(real_normal):
            e = np.zeros(2 * n)
            e[b] = h
            H[:, col] = ((grad(u + e) - grad(u - e)) / (2 * h))[real_normal]
        eig = np.sort(np.linalg.eigvalsh(0.5 * (H + H.T)))
        hessian_gap = float(np.max(np.abs(eig - expected))) if eig.size else 0.0

        R = np.zeros(2 * n)
        R[real_normal] = u[real_normal]
        radial = (mu(u + h * R) - mu(u - h * R)) / (2 * h)
        radial_gap = abs(radial - 2 * value)

        ok = floor_gap <= tol.residual and hessian_gap <= 10 * tol.residual \
            and (eig.size == 0 or eig[0] > 0) \
            and radial_gap <= 10 * tol.residual * max(1.0, value) \
            and (spread <= tol.residual or radial > 0)
        reports.append(CheckReport(
            check="morse_bott", formula="mu_phi_morse_bott", status=PASS if ok else FAIL,
            residuals=[max(floor_gap, hessian_gap, radial_gap)], samples=1,
            details={"hessian": hessian_gap, "radial": radial_gap},
            witnesses=[] if ok else [point.support.display()],
        ))
    return combine("morse_bott", "mu_phi_morse_bott", reports)


def _complex_structure(n: int) -> np.ndarray:
    return generator_matrix([1] * n)


def positivity_value(weights: Sequence[int], w, form: Optional[np.ndarray] = None) -> float:
    """omega(sum_j a_j J w_j, w) for a complex vector w; omega_0 unless `form` is given."""
    w_real = complex_to_real(np.asarray(w, dtype=complex))
    n = w_real.size // 2
    scale = np.repeat(np.array(weights, dtype=float), 2)
    v = scale * (_complex_structure(n) @ w_real)
    return float(v @ (standard_form(n) if form is None else form) @ w_real)


def positivity_check(step: SurgeryStep, samples: int, seed: int, tol: Tolerance,
                     perturbation: Optional[PerturbationForm] = None,
                     points: Sequence[SamplePoint] = ()) -> CheckReport:
    """
    omega(sum_j a_j J w_j, w) > 0 for random unit normal vectors w.

    For omega_0 the value is 2 sum_j a_j |w_j|^2; with a perturbation the
    perturbed form omega_0 + d(eta) is evaluated at the given points.
    """
    phi = _surgery(step).phi
    n = step.input_columns
    normal = list(step.stratum.normal_coordinates())
    rng = np.random.default_rng(seed)
    a = np.array(phi.normal, dtype=float)
    omega = standard_form(n)
    evaluate = perturbation.d_eta.evaluator() if perturbation is not None and points else None

    values, residuals = [], []
    for i in range(samples):
        w = np.zeros(n, dtype=complex)
        w[normal] = rng.normal(size=len(normal)) + 1j * rng.normal(size=len(normal))
        w /= np.linalg.norm(w)
        if evaluate is not None:
            form = omega + evaluate(points[i % len(points)].real[:2 * n])
            values.append(positivity_value(phi.normal, w, form))
        else:
            values.append(positivity_value(phi.normal, w))
            residuals.append(abs(values[-1] - 2.0 * float(a @ (np.abs(w) ** 2))))

    ok = min(values, default=1.0) > 0 and max(residuals, default=0.0) <= tol.residual
    return CheckReport(
        check="positivity" if evaluate is None else "positivity_perturbed", formula="positivity",
        status=PASS if ok else FAIL, residuals=residuals or [0.0], samples=samples, seed=seed,
        details={"min_value": min(values, default=0.0)},
    )


# ============================================================================
# SAMPLING NEAR THE STRATUM
# ============================================================================

def _fixed_faces(model: TorusWeightModel, step: SurgeryStep) -> List[Support]:
    fixed = step.stratum.fixed_support
    faces = [T for T in realizable_supports(model) if T.issubset(fixed)]
    if not faces:
        raise PreconditionError(f"no realizable face inside {fixed.display()}")
    return faces


def _segment(model: TorusWeightModel, step: SurgeryStep, rng):
    """(x_T, x_S, S): a fixed-face point and a point of a support S reaching off the stratum."""
    supports = realizable_supports(model)
    fixed = step.stratum.fixed_support
    faces = _fixed_faces(model, step)
    for _ in range(64):
        T = faces[int(rng.integers(len(faces)))]
        above = [S for S in supports if T.issubset(S) and not S.issubset(fixed)]
        if above:
            S = above[int(rng.integers(len(above)))]
            return moduli_point(model, T, rng), moduli_point(model, S, rng), S
    raise PreconditionError("every support meeting the stratum lies inside it")


def sample_region(model: TorusWeightModel, step: SurgeryStep, low, high,
                  count: int, seed: int) -> List[SamplePoint]:
    """
    Points of the level set with low < mu_phi < high.

    Moves along the segment from a fixed-face point (mu_phi = 0) to a point
    of a larger support; mu_phi is linear in the moduli, so the target value
    fixes the position exactly.
    """
    phi = _surgery(step).phi
    low, high = Fraction(low), Fraction(high)
    if not 0 <= low < high:
        raise InputError(f"need 0 <= low < high, got ({low}, {high})")
    rng = np.random.default_rng(seed)
    points: List[SamplePoint] = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 50 * max(count, 1):
            raise PreconditionError(f"could not sample mu_phi in ({low}, {high})")
        x_T, x_S, S = _segment(model, step, rng)
        top = min(high, phi.mu_phi(x_S))
        if top <= low:
            continue
        target = low + (top - low) * Fraction(int(rng.integers(1, 64)), 64)
        t = target / phi.mu_phi(x_S)
        x = tuple((1 - t) * p + t * q for p, q in zip(x_T, x_S))
        points.append(point_from_moduli(model, x, rng.uniform(0.0, 2 * np.pi, model.n), S))
    return points


# ============================================================================
# COLLAR
# ============================================================================

def collar_lift(step: SurgeryStep, point) -> np.ndarray:
    """z -> (z, sqrt((mu_phi(z) - eps)/m)) on the output coordinates."""
    z = _coords(point)[:step.input_columns]
    w = math.sqrt(max(mu_phi_value(step, z) - float(step.epsilon), 0.0) / step.m)
    return np.append(z, w)


def _in_collar(step: SurgeryStep, point: SamplePoint) -> bool:
    if point.moduli:
        mu = step.phi.mu_phi(point.moduli[:step.input_columns])
        return step.epsilon < mu < step.delta
    return float(step.epsilon) < mu_phi_value(step, point) < float(step.delta)


def collar_check(step: SurgeryStep, model: TorusWeightModel, samples: Sequence[SamplePoint],
                 tol: Tolerance, seed: int = 0, group_elements: int = 10) -> CheckReport:
    """
    The lift identifies the collar with a piece of the output level set.

    Checks the output constraints at the lift, that the lift pulls the
    product form back to omega_0 on the tangent space (central differences),
    and equivariance for the beta circle and for the torus.
    """
    _surgery(step)
    out = apply_step(model, step)
    n = model.n
    A = _weights(model)
    omega, omega_out = standard_form(n), standard_form(n + 1)
    beta = np.array(step.stratum.beta, dtype=float)
    phi_w = np.array(step.phi.weights, dtype=float)
    tau = np.array(step.tau_hat_row, dtype=float)
    A_out = _weights(out)
    rng = np.random.default_rng(seed)
    h = tol.fd_step

    def lift_real(u: np.ndarray) -> np.ndarray:
        return complex_to_real(collar_lift(step, real_to_complex(u)))

    reports = []
    for point in samples:
        if not _in_collar(step, point):
            raise PreconditionError(f"sample at {point.support.display()} is outside the collar")
        z = point.coords
        lifted = collar_lift(step, z)
        constraint = float(np.max(np.abs(out.moment(lifted) - out.level_floats())))

        u = point.real
        W = tangent_basis(A, u)
        DLW = np.column_stack([(lift_real(u + h * c) - lift_real(u - h * c)) / (2 * h) for c in W.T])
        pullback = float(np.max(np.abs(DLW.T @ omega_out @ DLW - W.T @ omega @ W)))

        equivariance = 0.0
        for _ in range(group_elements):
            t = float(rng.uniform())
            moved = z * np.exp(2j * np.pi * beta * t)
            acted = lifted * np.exp(2j * np.pi * (phi_w - step.m * tau) * t)
            equivariance = max(equivariance, float(np.max(np.abs(acted - collar_lift(step, moved)))))
            theta = rng.uniform(size=model.k)
            moved = z * np.exp(2j * np.pi * (theta @ A))
            acted = lifted * np.exp(2j * np.pi * (theta @ A_out[:model.k]))
            equivariance = max(equivariance, float(np.max(np.abs(acted - collar_lift(step, moved)))))

        ok = constraint <= tol.constraint and pullback <= 10 * tol.residual and equivariance <= tol.residual
        reports.append(CheckReport(
            check="collar", formula="H_tau_hat", status=PASS if ok else FAIL,
            residuals=[max(constraint, pullback, equivariance)], samples=1,
            details={"constraint": constraint, "pullback": pullback, "equivariance": equivariance},
            witnesses=[] if ok else [point.support.display()],
        ))
    return combine("collar", "H_tau_hat", reports, seed)


# ============================================================================
# COLLAPSE MAP
# ============================================================================

@dataclass(frozen=True)
class SmoothstepProfile:
    """h(t) = 3u^2 - 2u^3 with u = (t - eps)/(delta - eps) clipped to [0, 1]."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not 0 < self.epsilon < self.delta:
            raise InputError(f"profile needs 0 < epsilon < delta, got {self.epsilon}, {self.delta}")

    def __call__(self, t: float) -> float:
        u = min(max((t - self.epsilon) / (self.delta - self.epsilon), 0.0), 1.0)
        return u * u * (3.0 - 2.0 * u)


def validate_profile(profile: Callable[[float], float], epsilon: float, delta: float,
                     grid: int = 257) -> None:
    """h = 0 on [0, eps], strictly increasing on (eps, delta), h = 1 on [delta, 2 delta]."""
    below = np.linspace(0.0, epsilon, grid)
    inner = np.linspace(epsilon, delta, grid)[1:-1]
    above = np.linspace(delta, 2 * delta, grid)
    if any(profile(float(t)) != 0.0 for t in below):
        raise InputError("collapse profile must vanish on [0, epsilon]")
    if any(profile(float(t)) != 1.0 for t in above):
        raise InputError("collapse profile must equal 1 beyond delta")
    values = [profile(float(t)) for t in inner]
    if any(b <= a for a, b in zip(values, values[1:])) or not 0.0 < values[0]:
        raise InputError("collapse profile must increase strictly on (epsilon, delta)")


def collapse_map(step: SurgeryStep, point, profile: Optional[Callable[[float], float]] = None) -> np.ndarray:
    """v -> h(mu_phi(v)) v on the normal coordinates, identity on the fixed ones."""
    _surgery(step)
    if profile is None:
        profile = SmoothstepProfile(float(step.epsilon), float(step.delta))
    else:
        validate_profile(profile, float(step.epsilon), float(step.delta))
    z = _coords(point)[:step.input_columns].copy()
    normal = list(step.stratum.normal_coordinates())
    z[normal] *= profile(mu_phi_value(step, z))
    return z


def continuity_check(step: SurgeryStep, model: TorusWeightModel, terms: int = 10000,
                     seed: int = 0, grid: int = 64) -> CheckReport:
    """
    Images of v_n with mu_phi(v_n) = eps + 1/n approach the orbit of the projected limit.

    Orbit distance is the minimum over a grid of beta-circle elements.
    """
    phi = _surgery(step).phi
    rng = np.random.default_rng(seed)
    eps = step.epsilon
    for _ in range(64):
        x_T, x_S, S = _segment(model, step, rng)
        top = phi.mu_phi(x_S)
        if top > eps:
            break
    else:
        raise PreconditionError("no segment crosses the epsilon level")
    phases = np.exp(1j * rng.uniform(0.0, 2 * np.pi, model.n))

    def point_at(value: Fraction) -> np.ndarray:
        t = value / top
        x = [(1 - t) * p + t * q for p, q in zip(x_T, x_S)]
        return np.sqrt(np.array([float(v) for v in x])) * phases

    limit = collapse_map(step, point_at(eps))
    beta = np.array(step.stratum.beta, dtype=float)
    orbit = [limit * np.exp(2j * np.pi * beta * k / grid) for k in range(grid)]

    indices = [10 ** p for p in range(1, int(math.log10(terms)) + 1)]
    if terms not in indices:
        indices.append(terms)
    distances = []
    for n_ in indices:
        value = eps + Fraction(1, n_)
        if value >= top:
            continue
        image = collapse_map(step, point_at(value))
        distances.append(min(float(np.linalg.norm(image - g)) for g in orbit))

    ok = bool(distances) and distances[-1] < 1e-3 and \
        all(b <= a + 1e-12 for a, b in zip(distances, distances[1:]))
    return CheckReport(check="collapse_continuity", formula="collapse_continuity",
                       status=PASS if ok else FAIL, residuals=distances, samples=len(distances),
                       seed=seed, details={"terms": float(terms)})


# ============================================================================
# AVERAGING AND THE MOSER SYSTEM
# ============================================================================

@lru_cache(maxsize=64)
def _averaged(two_form: PolyTwoForm, weights: Tuple[int, ...]) -> PolyTwoForm:
    return two_form.average([weights])


def quadrature_average(two_form: PolyTwoForm, weights: Sequence[int], u: np.ndarray,
                       order: int) -> np.ndarray:
    """(1/L) sum_l R_l^T M(R_l u) R_l over L equally spaced circle elements."""
    evaluate = two_form.evaluator()
    total = np.zeros((u.size, u.size))
    for l in range(order):
        R = rotation(weights, 2 * np.pi * l / order)
        total += R.T @ evaluate(R @ u) @ R
    return total / order


def average_form(perturbation: PerturbationForm, phi_weights: Sequence[int], point,
                 quadrature_order: Optional[int] = None) -> FormValue:
    """
    phi-average of omega_0 + d(eta) at a point.

    The average is exact (weight-zero Fourier component); quadrature only
    cross-validates it.
    """
    weights = tuple(int(w) for w in phi_weights)
    u = point.real if isinstance(point, SamplePoint) else np.asarray(point, dtype=float)
    n = perturbation.n
    value = standard_form(n) + _averaged(perturbation.d_eta, weights).evaluator()(u[:2 * n])
    if quadrature_order:
        numeric = standard_form(n) + quadrature_average(perturbation.d_eta, weights, u[:2 * n], quadrature_order)
        gap = float(np.max(np.abs(numeric - value)))
        if gap > 1e-9 * max(1.0, float(np.max(np.abs(value)))):
            raise InvariantViolation(f"Fourier and quadrature averages differ by {gap:.3e}")
    return FormValue(value)


@dataclass(frozen=True)
class MoserData:
    """d(eta), sigma = avg(d eta) - d eta and its torus-invariant primitive alpha."""

    d_eta: PolyTwoForm
    sigma: PolyTwoForm
    alpha: PolyOneForm


@lru_cache(maxsize=32)
def moser_data(model: TorusWeightModel, step: SurgeryStep, perturbation: PerturbationForm) -> MoserData:
    _surgery(step)
    if perturbation.n != model.n:
        raise InputError(f"perturbation lives on C^{perturbation.n}, model on C^{model.n}")
    d_eta = perturbation.d_eta
    sigma = _averaged(d_eta, tuple(step.phi.normal)) - d_eta
    alpha = sigma.radial_primitive(step.stratum.normal_coordinates()).average(model.weights.to_list())
    logger.debug("Moser primitive of degree %d", alpha.degree())
    return MoserData(d_eta, sigma, alpha)


def moser_vector(model: TorusWeightModel, step: SurgeryStep, perturbation: PerturbationForm,
                 s: float, u: np.ndarray, tol: Tolerance) -> np.ndarray:
    """
    X_s at u: orthogonal to the orbit inside the tangent space, with
    (i_X omega_s + alpha) = 0 on that complement.
    """
    data = moser_data(model, step, perturbation)
    A = _weights(model)
    Ms = standard_form(model.n) + data.d_eta.evaluator()(u) + s * data.sigma.evaluator()(u)
    W = tangent_basis(A, u)
    G = W.T @ generators(A, u)
    Q, _ = np.linalg.qr(G, mode="complete")
    B = W @ Q[:, model.k:]
    if B.shape[1] == 0:
        return np.zeros_like(u)
    system = B.T @ Ms @ B
    if np.linalg.svd(system, compute_uv=False).min(initial=np.inf) < tol.rank_gap_high:
        raise MoserError()
    c = np.linalg.solve(system.T, -B.T @ data.alpha.evaluator()(u))
    return B @ c


def _toward_fixed_face(model: TorusWeightModel, step: SurgeryStep, point: SamplePoint,
                       rng) -> Callable[[Fraction], np.ndarray]:
    """Points on the segment from a fixed-face point (t = 0) to `point` (t = 1)."""
    faces = _fixed_faces(model, step)
    x_T = moduli_point(model, faces[int(rng.integers(len(faces)))], rng)
    x = point.moduli or tuple(Fraction(float(v)) for v in np.abs(point.coords) ** 2)
    phases = np.where(np.abs(point.coords) > 0, np.exp(1j * np.angle(point.coords)), 1.0)

    def at(t: Fraction) -> np.ndarray:
        moduli = [(1 - t) * p + t * q for p, q in zip(x_T, x)]
        return complex_to_real(np.sqrt(np.array([float(v) for v in moduli])) * phases)

    return at


def moser_pointwise(model: TorusWeightModel, step: SurgeryStep, perturbation: PerturbationForm,
                    s: float, point: SamplePoint, tol: Tolerance, seed: int = 0) -> CheckReport:
    """
    Residuals of the Moser system at one point.

    (a) i_X omega_s + alpha on the full tangent space, (b) the finite-difference
    bracket of X with every torus generator, (c) |X| on the way to and at a
    fixed-face point.
    """
    if not 0.0 <= s <= 1.0:
        raise InputError(f"s must lie in [0, 1], got {s}")
    data = moser_data(model, step, perturbation)
    A = _weights(model)
    u = point.real
    X = moser_vector(model, step, perturbation, s, u, tol)

    Ms = standard_form(model.n) + data.d_eta.evaluator()(u) + s * data.sigma.evaluator()(u)
    W = tangent_basis(A, u)
    tangent = float(np.max(np.abs(W.T @ (Ms.T @ X + data.alpha.evaluator()(u)))))

    h = tol.fd_step
    bracket = 0.0
    for row in model.weights.entries:
        K = generator_matrix(row)
        ahead = moser_vector(model, step, perturbation, s, rotation(row, h) @ u, tol)
        behind = moser_vector(model, step, perturbation, s, rotation(row, -h) @ u, tol)
        bracket = max(bracket, float(np.max(np.abs((ahead - behind) / (2 * h) - K @ X))))

    path = _toward_fixed_face(model, step, point, np.random.default_rng(seed))
    near = float(np.linalg.norm(moser_vector(model, step, perturbation, s, path(Fraction(1, 1024)), tol)))
    at_face = float(np.linalg.norm(moser_vector(model, step, perturbation, s, path(Fraction(0)), tol)))
    vanishing = at_face <= tol.residual and near <= float(np.linalg.norm(X)) + tol.residual

    ok = tangent <= tol.residual and bracket <= 10 * tol.residual and vanishing
    return CheckReport(
        check="moser", formula="moser_system", status=PASS if ok else FAIL,
        residuals=[max(tangent, bracket / 10)], samples=1, seed=seed,
        details={"tangent": tangent, "bracket": bracket, "fixed_face": at_face, "norm": float(np.linalg.norm(X))},
        witnesses=[] if ok else [point.support.display()],
    )


def admissible_perturbation(model: TorusWeightModel, step: SurgeryStep, degree: int = 4,
                            scale: Fraction = Fraction(1, 100), seed: int = 0) -> PerturbationForm:
    """A seeded admissible eta for the step's stratum."""
    return random_admissible_eta(model.weights.to_list(), _surgery(step).stratum.normal_coordinates(),
                                 degree, scale, seed)


def admissibility_check(model: TorusWeightModel, step: SurgeryStep, perturbation: PerturbationForm,
                        samples: Sequence[SamplePoint], tol: Tolerance) -> CheckReport:
    """eta vanishes to second order on the fixed subspace and i_Y d(eta) = 0 at the samples."""
    order_ok = vanishes_to_second_order(perturbation.eta, step.stratum.normal_coordinates())
    A = _weights(model)
    evaluate = perturbation.d_eta.evaluator()
    residuals = []
    for point in samples:
        u = point.real
        M = evaluate(u)
        residuals.append(max((float(np.max(np.abs(Y @ M))) for Y in generators(A, u).T), default=0.0))
    ok = order_ok and max(residuals, default=0.0) <= tol.residual
    return CheckReport(check="admissibility", formula="eta_admissible", status=PASS if ok else FAIL,
                       residuals=residuals, samples=len(samples),
                       details={"vanishing_order": 2.0 if order_ok else 0.0})


# ============================================================================
# STAGED STABILISERS
# ============================================================================

def _stage_content(prior: IntMatrix, row: Sequence[int]):
    """Order of the image of one row in Z^S modulo the real span of the earlier rows."""
    size = len(row)
    if prior.rows == 0:
        reduced = list(row)
    else:
        snf = smith_normal_form(prior)
        rank = sum(1 for d in snf.diagonal() if d)
        V = snf.V
        image = [sum(row[i] * V[i, j] for i in range(size)) for j in range(size)]
        reduced = image[rank:]
    g = 0
    for x in reduced:
        g = math.gcd(g, x)
    return g if g else INFINITE


def staged_order(model: TorusWeightModel, support: Support):
    """Product over rows of the isotropy each row adds to the ones before it."""
    idx = support.indices
    total = 1
    for i in range(model.k):
        prior = IntMatrix.from_rows([[model.weights[r, j] for j in idx] for r in range(i)], cols=len(idx))
        content = _stage_content(prior, [model.weights[i, j] for j in idx])
        if content == INFINITE:
            return INFINITE
        total *= content
    return total


def stage_quotient_consistency(model: TorusWeightModel) -> CheckReport:
    """One-shot stabiliser orders equal the staged products on every realizable support."""
    witnesses = []
    supports = realizable_supports(model)
    for S in supports:
        one_shot = stabilizer(model.weights, S).order
        if staged_order(model, S) != one_shot:
            witnesses.append(S.display())
    return CheckReport(check="stage_quotient", formula="quotient_by_product",
                       status=FAIL if witnesses else PASS, residuals=[float(len(witnesses))],
                       samples=len(supports), witnesses=witnesses)


# ============================================================================
# CUT EMBEDDING
# ============================================================================

def cut_embedding_check(cut, hamiltonian: Sequence[int], reduced_rows: Sequence[Sequence[int]],
                        count: int, seed: int, tol: Tolerance) -> CheckReport:
    """
    p -> (p, sqrt(+-(a - h(p)))) lands on the cut level set and pulls the
    product form back to omega_0 on the tangent space of M.
    """
    model = cut.cut_model
    n = model.n - 1
    K = np.array(hamiltonian, dtype=float)
    A_M = np.array(reduced_rows, dtype=float).reshape(len(reduced_rows), n)
    omega, omega_out = standard_form(n), standard_form(n + 1)
    a = float(cut.cut_value)
    h = tol.fd_step

    def embed(p: np.ndarray) -> np.ndarray:
        height = cut.sign * (a - float(K @ (np.abs(p) ** 2)))
        return np.append(p, math.sqrt(max(height, 0.0)))

    def embed_real(u: np.ndarray) -> np.ndarray:
        return complex_to_real(embed(real_to_complex(u)))

    supports = [S for S in realizable_supports(model) if cut.new_coordinate in S]
    if not supports:
        raise PreconditionError("the cut has no interior points")
    reports = []
    for i in range(count):
        point = sample_point(model, supports[i % len(supports)], seed + i)
        p = point.coords[:n]
        lifted = embed(p)
        constraint = float(np.max(np.abs(model.moment(lifted) - model.level_floats())))
        u = complex_to_real(p)
        W = tangent_basis(A_M, u) if A_M.shape[0] else np.eye(2 * n)
        DLW = np.column_stack([(embed_real(u + h * c) - embed_real(u - h * c)) / (2 * h) for c in W.T])
        pullback = float(np.max(np.abs(DLW.T @ omega_out @ DLW - W.T @ omega @ W)))
        ok = constraint <= tol.residual and pullback <= 10 * tol.residual
        reports.append(CheckReport(check="cut_embedding", formula="cut_embedding",
                                   status=PASS if ok else FAIL,
                                   residuals=[max(constraint, pullback)], samples=1,
                                   details={"constraint": constraint, "pullback": pullback},
                                   witnesses=[] if ok else [point.support.display()]))
    return combine("cut_embedding", "cut_embedding", reports, seed)


# ============================================================================
# SUITES
# ============================================================================

@dataclass(frozen=True)
class VerifySettings:
    seed: int = 20240601
    tolerance: Tolerance = field(default_factory=Tolerance)
    samples: Dict[str, int] = field(default_factory=lambda: {
        "kernel": 100, "morse": 100, "collar": 50, "moser": 50})
    perturbation_degree: int = 4
    perturbation_scale: Fraction = Fraction(1, 100)
    quadrature_order: int = 64
    continuity_terms: int = 10000

    def count(self, suite: str) -> int:
        return int(self.samples.get(suite, 10))


def _kernel_suite(models, settings: VerifySettings) -> List[CheckReport]:
    out = []
    for i, model in enumerate(models):
        points = sample_points(model, settings.count("kernel"), settings.seed)
        reports = [kernel_rank_check(model, p, settings.tolerance) for p in points]
        out.append(combine(f"kernel_rank/model{i}", "ker_omega_span_Y", reports, settings.seed))
    return out


def _surgeries(certificate: ResolutionCertificate, models):
    for i, step in enumerate(certificate.steps):
        if step.kind == SURGERY:
            yield i, step, models[i]


def _morse_suite(certificate, models, settings: VerifySettings) -> List[CheckReport]:
    out = []
    tol = settings.tolerance
    for i, step, model in _surgeries(certificate, models):
        seed = settings.seed + i
        points = sample_region(model, step, 0, step.delta, settings.count("morse"), seed)
        report = morse_bott_check(step, points, tol)
        report.check, report.seed = f"morse_bott/step{i}", seed
        positivity = positivity_check(step, settings.count("morse"), seed, tol)
        positivity.check = f"positivity/step{i}"
        out += [report, positivity]
    return out


def _collar_suite(certificate, models, settings: VerifySettings) -> List[CheckReport]:
    out = []
    tol = settings.tolerance
    for i, step, model in _surgeries(certificate, models):
        seed = settings.seed + i
        points = sample_region(model, step, step.epsilon, step.delta, settings.count("collar"), seed)
        report = collar_check(step, model, points, tol, seed)
        report.check = f"collar/step{i}"
        continuity = continuity_check(step, model, settings.continuity_terms, seed)
        continuity.check = f"collapse_continuity/step{i}"
        out += [report, continuity]
    return out


def _moser_suite(certificate, models, settings: VerifySettings) -> List[CheckReport]:
    out = []
    tol = settings.tolerance
    for i, step, model in _surgeries(certificate, models):
        seed = settings.seed + i
        eta = admissible_perturbation(model, step, settings.perturbation_degree,
                                      settings.perturbation_scale, seed)
        points = sample_region(model, step, 0, step.delta, settings.count("moser"), seed)
        admissible = admissibility_check(model, step, eta, points, tol)
        admissible.check = f"admissibility/step{i}"

        averages = []
        for p in points:
            try:
                average_form(eta, step.phi.normal, p, settings.quadrature_order)
                averages.append(CheckReport("phi_average", "phi_average", PASS, [0.0], 1))
            except InvariantViolation as exc:
                averages.append(CheckReport("phi_average", "phi_average", FAIL, [1.0], 1, witnesses=[str(exc)]))
        moser = []
        for s in (0.0, 0.5, 1.0):
            for p in points:
                try:
                    moser.append(moser_pointwise(model, step, eta, s, p, tol, seed))
                except MoserError as exc:
                    moser.append(CheckReport("moser", "moser_system", FAIL, [math.inf], 1,
                                             witnesses=[f"{p.support.display()}: {exc}"]))
        out += [admissible, combine(f"phi_average/step{i}", "phi_average", averages, seed),
                combine(f"moser/step{i}", "moser_system", moser, seed)]
    return out


def _stage_suite(certificate, models, settings: VerifySettings) -> List[CheckReport]:
    out = []
    for i, model in enumerate(models):
        report = stage_quotient_consistency(model)
        report.check = f"stage_quotient/model{i}"
        out.append(report)
    for i, step, model in _surgeries(certificate, models):
        after = models[i + 1]
        loose = tau_hat_stabilizers(step, after)
        out.append(CheckReport(f"tau_hat_free/step{i}", "tau_hat_free", FAIL if loose else PASS,
                               [float(len(loose))], len(realizable_supports(after)),
                               witnesses=[S.display() for S, _ in loose]))
        moved = support_locality_violations(model, step, after)
        out.append(CheckReport(f"support_locality/step{i}", "support_locality", FAIL if moved else PASS,
                               [float(len(moved))], len(realizable_supports(model)),
                               witnesses=[S.display() for S in moved]))
    return out


def run_suites(certificate: ResolutionCertificate, suites: Sequence[str],
               settings: VerifySettings) -> VerificationReport:
    """Run the named suites ("all" for every one) over every model of a certificate."""
    if "all" in suites:
        suites = SUITES
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise InputError(f"unknown verify suite(s): {', '.join(unknown)}")
    models = replay(certificate)
    checks: List[CheckReport] = []
    if "kernel" in suites:
        checks += _kernel_suite(models, settings)
    if "morse" in suites:
        checks += _morse_suite(certificate, models, settings)
    if "collar" in suites:
        checks += _collar_suite(certificate, models, settings)
    if "moser" in suites:
        checks += _moser_suite(certificate, models, settings)
    if "stage" in suites:
        checks += _stage_suite(certificate, models, settings)
    report = VerificationReport(checks)
    logger.info("verification %s over %d checks", report.status, len(report.checks))
    return report
