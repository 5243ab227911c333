"""
Test script for numerical verification.

Demonstrates:
1. Kernel rank of the restricted standard form
2. Morse-Bott structure of mu_phi and positivity
3. The collar lift and the collapse map
4. phi-averaging and the pointwise Moser system
5. Staged stabilisers, cut embedding and full suites
6. The Moser system with zero and degree 3 perturbations
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbires.cut import ABOVE, HamiltonianModel, symplectic_cut
from orbires.errors import InputError, PreconditionError
from orbires.forms import PerturbationForm
from orbires.model import Support, TorusWeightModel, sample_point
from orbires.resolve import replay, resolve_all
from orbires.storage import load_json, model_from_dict
from orbires.verify import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    CheckReport,
    FormValue,
    SmoothstepProfile,
    Tolerance,
    VerificationReport,
    VerifySettings,
    admissibility_check,
    admissible_perturbation,
    average_form,
    collapse_map,
    collar_check,
    collar_lift,
    combine,
    continuity_check,
    cut_embedding_check,
    fibre_hessian,
    generator_matrix,
    kernel_rank_check,
    moment_differential,
    morse_bott_check,
    moser_data,
    moser_pointwise,
    mu_phi_value,
    positivity_check,
    positivity_value,
    run_suites,
    sample_points,
    sample_region,
    stage_quotient_consistency,
    staged_order,
    standard_form,
    validate_profile,
    worst_status,
)

CP112 = TorusWeightModel.create([[1, 1, 2]], [1])
OPPOSITE = TorusWeightModel.create([[1, -1, 2]], [1])
TOL = Tolerance()
FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def _step():
    cert = resolve_all(CP112)
    return cert, cert.steps[0]


def test_tolerance_validation():
    with pytest.raises(InputError):
        Tolerance(rank_gap_low=1e-5, rank_gap_high=1e-6)
    with pytest.raises(InputError):
        Tolerance(residual=0.0)


def test_status_folding():
    assert worst_status([PASS, PASS]) == PASS
    assert worst_status([PASS, INCONCLUSIVE]) == INCONCLUSIVE
    assert worst_status([INCONCLUSIVE, FAIL, PASS]) == FAIL
    reports = [CheckReport("a", "f", PASS, [1e-12], 1, details={"x": 0.5}),
               CheckReport("a", "f", FAIL, [3e-3], 1, details={"x": 0.25}, witnesses=["{1}"])]
    folded = combine("a", "f", reports, seed=4)
    assert folded.status == FAIL
    assert folded.samples == 2
    assert folded.max_residual == 3e-3
    assert folded.details == {"x": 0.5}
    assert folded.witnesses == ["{1}"]
    report = VerificationReport([CheckReport("b", "f", PASS), CheckReport("a", "f", INCONCLUSIVE)])
    assert [c.check for c in report.checks] == ["a", "b"]
    assert report.status == INCONCLUSIVE


def test_moment_is_hamiltonian():
    print("=" * 70)
    print("TEST 1: d(mu) = i_Y omega_0 for the standard conventions")
    print("=" * 70)
    rng = np.random.default_rng(0)
    A = np.array([[1.0, 1.0, 2.0], [0.0, -1.0, 3.0]])
    omega = standard_form(3)
    for _ in range(5):
        u = rng.normal(size=6)
        J = moment_differential(A, u)
        for r, row in enumerate(A):
            assert np.allclose((generator_matrix(row) @ u) @ omega, J[r])
    assert np.allclose(FormValue.standard(2).matrix, standard_form(2))


def test_kernel_rank():
    print("=" * 70)
    print("TEST 2: the null directions of omega_0 on the level set are the orbits")
    print("=" * 70)
    point = sample_point(CP112, Support((0, 1, 2)), seed=1)
    report = kernel_rank_check(CP112, point, TOL)
    print(f"details: {report.details}")
    assert report.status == PASS
    assert report.details == {"tangent_dim": 5, "kernel_dim": 1}

    cert, _ = _step()
    final = cert.final
    point = sample_point(final, Support((0, 1, 2, 3)), seed=2)
    report = kernel_rank_check(final, point, TOL)
    assert report.status == PASS
    assert report.details == {"tangent_dim": 6, "kernel_dim": 2}

    for point in sample_points(final, 12, seed=3):
        assert kernel_rank_check(final, point, TOL).passed


def test_kernel_rank_on_fixtures():
    for name in ("cp112.json", "free_circle.json", "line_2_3.json", "cut_line.json"):
        model = model_from_dict(load_json(os.path.join(FIXTURES, name)))
        for current in (model, resolve_all(model).final):
            for point in sample_points(current, 100, seed=20):
                report = kernel_rank_check(current, point, TOL)
                assert report.status == PASS, (name, point.support.display(), report.details)


def test_mu_phi_and_hessian():
    _, step = _step()
    assert mu_phi_value(step, np.array([0.3, 0.4j, 0.0])) == pytest.approx(0.25)
    assert fibre_hessian(step) == (2, 2, 2, 2)


def test_morse_bott():
    print("=" * 70)
    print("TEST 3: mu_phi is Morse-Bott with minimum on the stratum")
    print("=" * 70)
    _, step = _step()
    points = sample_region(CP112, step, 0, step.delta, 100, seed=5)
    assert all(0 < step.phi.mu_phi(p.moduli) < step.delta for p in points)
    report = morse_bott_check(step, points, TOL)
    print(f"max residual: {report.max_residual:.3e}")
    assert report.status == PASS
    assert report.samples == 100


def test_positivity():
    _, step = _step()
    report = positivity_check(step, 100, seed=6, tol=TOL)
    assert report.status == PASS
    assert report.details["min_value"] > 0
    w = np.array([0.6, 0.8j, 0.0])
    assert positivity_value(step.phi.normal, w) == pytest.approx(2.0)

    eta = admissible_perturbation(CP112, step, degree=3, seed=6)
    points = sample_region(CP112, step, 0, step.delta, 5, seed=6)
    perturbed = positivity_check(step, 10, seed=6, tol=TOL, perturbation=eta, points=points)
    assert perturbed.check == "positivity_perturbed"
    assert perturbed.status == PASS


def test_collar_lift():
    print("=" * 70)
    print("TEST 4: collar lift and the output level set")
    print("=" * 70)
    _, step = _step()
    z = np.array([math.sqrt(0.5), 0.0, math.sqrt(0.25)], dtype=complex)
    lifted = collar_lift(step, z)
    assert lifted[-1] == pytest.approx(math.sqrt(1 / 8))

    points = sample_region(CP112, step, step.epsilon, step.delta, 50, seed=7)
    report = collar_check(step, CP112, points, TOL, seed=7)
    print(f"details: {report.details}")
    assert report.status == PASS
    assert report.samples == 50
    assert TOL.constraint == 1e-12
    assert report.details["constraint"] <= TOL.constraint
    assert report.details["pullback"] <= 1e-7
    assert report.details["equivariance"] <= 1e-8


def test_collar_rejects_points_outside():
    _, step = _step()
    inside_stratum = sample_region(CP112, step, 0, step.epsilon, 3, seed=8)
    with pytest.raises(PreconditionError):
        collar_check(step, CP112, inside_stratum, TOL)


def test_collapse_map():
    _, step = _step()
    near = np.array([0.1, 0.1j, math.sqrt((1 - 0.02) / 2)])
    collapsed = collapse_map(step, near)
    assert np.allclose(collapsed[:2], 0.0)
    assert collapsed[2] == near[2]

    far = np.array([math.sqrt(0.4), math.sqrt(0.4), math.sqrt(0.1)], dtype=complex)
    assert np.allclose(collapse_map(step, far), far)

    profile = SmoothstepProfile(float(step.epsilon), float(step.delta))
    validate_profile(profile, float(step.epsilon), float(step.delta))
    with pytest.raises(InputError):
        collapse_map(step, far, profile=lambda t: t)
    with pytest.raises(InputError):
        SmoothstepProfile(0.5, 0.25)


def test_collapse_continuity():
    print("=" * 70)
    print("TEST 5: the collapse map is continuous at the epsilon level")
    print("=" * 70)
    _, step = _step()
    report = continuity_check(step, CP112, terms=10000, seed=9)
    print(f"distances: {report.residuals}")
    assert report.status == PASS
    assert report.residuals[-1] < 1e-3


def test_average_form_matches_quadrature():
    _, step = _step()
    eta = admissible_perturbation(CP112, step, degree=4, seed=10)
    for point in sample_region(CP112, step, 0, step.delta, 4, seed=10):
        value = average_form(eta, step.phi.normal, point, quadrature_order=64)
        assert np.allclose(value.matrix, -value.matrix.T)


def test_moser_primitive():
    _, step = _step()
    eta = admissible_perturbation(CP112, step, degree=4, seed=11)
    data = moser_data(CP112, step, eta)
    assert not data.sigma.is_zero()
    assert (data.alpha.d() - data.sigma).is_zero()


def test_moser_pointwise():
    print("=" * 70)
    print("TEST 6: the pointwise Moser system is solved and equivariant")
    print("=" * 70)
    _, step = _step()
    eta = admissible_perturbation(CP112, step, degree=4, seed=12)
    points = sample_region(CP112, step, 0, step.delta, 3, seed=12)
    assert admissibility_check(CP112, step, eta, points, TOL).status == PASS
    for s in (0.0, 0.5, 1.0):
        for point in points:
            report = moser_pointwise(CP112, step, eta, s, point, TOL, seed=12)
            print(f"s={s}: {report.details}")
            assert report.details["tangent"] <= TOL.residual
            assert report.details["bracket"] <= 10 * TOL.residual
            assert report.details["fixed_face"] <= TOL.residual
            assert report.status == PASS
    with pytest.raises(InputError):
        moser_pointwise(CP112, step, eta, 1.5, points[0], TOL)


def test_moser_zero_perturbation():
    _, step = _step()
    zero = PerturbationForm.zero(CP112.n)
    assert moser_data(CP112, step, zero).alpha.is_zero()
    for point in sample_region(CP112, step, 0, step.delta, 10, seed=16):
        for s in (0.0, 0.5, 1.0):
            report = moser_pointwise(CP112, step, zero, s, point, TOL, seed=16)
            assert report.details["norm"] == 0.0
            assert report.details["tangent"] == 0.0
            assert report.details["bracket"] == 0.0
            assert report.status == PASS


def test_moser_degree_three():
    print("=" * 70)
    print("TEST 7: a degree 3 perturbation that phi-averaging changes")
    print("=" * 70)
    cert = resolve_all(OPPOSITE)
    step = cert.steps[0]
    assert step.stratum.normal_coordinates() == (0, 1)
    eta = admissible_perturbation(OPPOSITE, step, degree=3, seed=17)
    data = moser_data(OPPOSITE, step, eta)
    assert not data.sigma.is_zero()
    assert not data.alpha.is_zero()

    points = sample_region(OPPOSITE, step, 0, step.delta, 50, seed=17)
    assert admissibility_check(OPPOSITE, step, eta, points, TOL).status == PASS
    norms = []
    for s in (0.0, 0.5, 1.0):
        for point in points:
            report = moser_pointwise(OPPOSITE, step, eta, s, point, TOL, seed=17)
            assert report.details["tangent"] <= TOL.residual
            assert report.details["bracket"] <= 1e-7
            assert report.status == PASS, report.details
            norms.append(report.details["norm"])
    assert max(norms) > 0.0


def test_stage_quotient_on_resolutions():
    cert = resolve_all(TorusWeightModel.create([[2, 3]], [1]))
    for model in replay(cert):
        assert stage_quotient_consistency(model).status == PASS
    assert staged_order(CP112, Support((2,))) == 2
    assert staged_order(TorusWeightModel.create([[1, 0], [0, 1]], [1, 0]), Support((0,))) == "infinite"


def test_stage_quotient_random_models():
    print("=" * 70)
    print("TEST 8: staged stabiliser products agree with one-shot orders")
    print("=" * 70)
    rng = np.random.default_rng(13)
    for _ in range(200):
        weights = rng.integers(-3, 4, size=(2, 3)).tolist()
        level = [int(v) for v in rng.integers(-2, 4, size=2)]
        model = TorusWeightModel.create(weights, level)
        report = stage_quotient_consistency(model)
        assert report.status == PASS, (weights, level, report.witnesses)


def test_cut_embedding():
    hmodel = HamiltonianModel(TorusWeightModel.create([[1, 2]], [3]), ham_row=0)
    cut = symplectic_cut(hmodel, 2, ABOVE)
    report = cut_embedding_check(cut, hmodel.hamiltonian, [], 12, seed=14, tol=TOL)
    assert report.status == PASS
    assert report.samples == 12


def test_run_suites():
    print("=" * 70)
    print("TEST 9: every suite passes on CP(1,1,2)")
    print("=" * 70)
    cert = resolve_all(CP112)
    settings = VerifySettings(seed=15, samples={"kernel": 6, "morse": 6, "collar": 4, "moser": 2},
                              continuity_terms=1000)
    report = run_suites(cert, ["all"], settings)
    for check in report.checks:
        print(f"  {check.check}: {check.status} ({check.max_residual:.2e})")
    assert report.status == PASS
    names = {c.check for c in report.checks}
    assert {"kernel_rank/model0", "kernel_rank/model1", "morse_bott/step0", "collar/step0",
            "moser/step0", "stage_quotient/model1", "tau_hat_free/step0"} <= names
    moser = next(c for c in report.checks if c.check == "moser/step0")
    assert settings.perturbation_degree == 4
    assert moser.details["norm"] > 0.0


def test_run_suites_unknown():
    cert = resolve_all(CP112)
    with pytest.raises(InputError):
        run_suites(cert, ["kernel", "bogus"], VerifySettings())


def main():
    test_moment_is_hamiltonian()
    test_kernel_rank()
    test_morse_bott()
    test_collar_lift()
    test_collapse_continuity()
    test_moser_pointwise()
    test_stage_quotient_random_models()
    test_run_suites()
    print("All verify tests passed.")


if __name__ == "__main__":
    main()
