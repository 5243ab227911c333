"""
Test script for polynomial differential forms.

Demonstrates:
1. Exterior derivative and closedness
2. Exact circle averaging by Fourier filtering
3. The fibrewise radial primitive
4. Seeded admissible perturbations
"""

import os
import sys

import numpy as np
import pytest
import sympy as sp

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbires.errors import InputError
from orbires.forms import (
    PerturbationForm,
    PolyOneForm,
    PolyTwoForm,
    horizontal_pairs,
    invariant_monomials,
    radius_differential,
    random_admissible_eta,
    real_symbols,
    vanishes_to_second_order,
)

CP112_WEIGHTS = [[1, 1, 2]]
CP112_NORMAL = (0, 1)
PHI_WEIGHTS = [[1, 1, 0]]


def test_exterior_derivative():
    print("=" * 70)
    print("TEST 1: d(x dy) = dx ^ dy")
    print("=" * 70)
    x, y = real_symbols(1)
    omega = PolyOneForm(1, (0, x)).d()
    assert omega.entries == ((0, 1), (-1, 0))
    assert omega.is_skew() and omega.is_closed()
    assert radius_differential(2, 1).d().is_zero()


def test_closed_forms():
    x0, y0, x1, y1 = real_symbols(2)
    eta = PolyOneForm(2, (x1 * y0, x0 ** 2, y1, x0 * y1))
    assert eta.d().is_closed()
    not_closed = PolyTwoForm(2, ((0, x1, 0, 0), (-x1, 0, 0, 0), (0, 0, 0, 0), (0, 0, 0, 0)))
    assert not not_closed.is_closed()


def test_wrong_shapes():
    with pytest.raises(InputError):
        PolyOneForm(2, (0, 0, 0))
    with pytest.raises(InputError):
        PolyTwoForm(1, ((0,),))
    with pytest.raises(InputError):
        PolyOneForm.zero(2).average([[1, 1, 1]])


def test_average_keeps_invariant_terms():
    print("=" * 70)
    print("TEST 2: averaging keeps weight-zero terms only")
    print("=" * 70)
    x, y = real_symbols(1)
    rotation_form = PolyOneForm(1, (-y, x))
    assert (rotation_form.average([[1]]) - rotation_form).is_zero()

    # Re(z dz) has weight 2
    assert PolyOneForm(1, (x, -y)).average([[1]]).is_zero()

    radial = radius_differential(1, 0)
    assert (radial.average([[3]]) - radial).is_zero()


def test_average_two_form():
    x0, y0, x1, y1 = real_symbols(2)
    # h d|z_1|^2 with h = Re(z0 z1) has weight 2 under (1, 1)
    h = x0 * x1 - y0 * y1
    eta = PolyOneForm(2, (0, 0, 2 * x1 * h, 2 * y1 * h))
    assert eta.average([[1, 1]]).is_zero()
    assert eta.d().average([[1, 1]]).is_zero()
    # ... and weight 0 under (1, -1)
    assert (eta.d().average([[1, -1]]) - eta.d()).is_zero()


def test_average_rejects_non_polynomials():
    x, y = real_symbols(1)
    with pytest.raises(InputError):
        PolyOneForm(1, (sp.sin(x), 0)).average([[1]])


def test_radial_primitive():
    print("=" * 70)
    print("TEST 3: radial primitive of dx ^ dy")
    print("=" * 70)
    x, y = real_symbols(1)
    omega = PolyOneForm(1, (0, x)).d()
    alpha = omega.radial_primitive([0])
    print(f"alpha: {alpha.coeffs}")
    assert alpha.coeffs == (-y / 2, x / 2)
    assert (alpha.d() - omega).is_zero()


def test_radial_primitive_of_averaging_defect():
    eta = random_admissible_eta(CP112_WEIGHTS, CP112_NORMAL, degree=4, seed=3)
    sigma = eta.d_eta.average(PHI_WEIGHTS) - eta.d_eta
    assert not sigma.is_zero()
    alpha = sigma.radial_primitive(CP112_NORMAL)
    assert (alpha.d() - sigma).is_zero()
    assert (alpha.average(CP112_WEIGHTS).d() - sigma).is_zero()


def test_evaluator():
    values = radius_differential(2, 1)(np.array([1.0, 2.0, 3.0, 4.0]))
    assert np.allclose(values, [0.0, 0.0, 6.0, 8.0])
    x, y = real_symbols(1)
    matrix = PolyOneForm(1, (0, x * x)).d()(np.array([3.0, 5.0]))
    assert np.allclose(matrix, [[0.0, 6.0], [-6.0, 0.0]])


def test_invariant_monomials():
    monomials = invariant_monomials(CP112_WEIGHTS, CP112_NORMAL, 2)
    assert len(monomials) == 4
    assert ((1, 0, 0), (1, 0, 0)) in monomials
    assert ((0, 0, 1), (0, 0, 1)) not in monomials
    cubic = invariant_monomials(CP112_WEIGHTS, CP112_NORMAL, 3)
    assert ((1, 1, 0), (0, 0, 1)) in cubic


def test_random_admissible_eta():
    print("=" * 70)
    print("TEST 4: seeded admissible perturbations")
    print("=" * 70)
    eta = random_admissible_eta(CP112_WEIGHTS, CP112_NORMAL, degree=3, seed=1)
    assert isinstance(eta, PerturbationForm)
    assert not eta.eta.is_zero()
    assert eta.degree == 3
    assert vanishes_to_second_order(eta.eta, CP112_NORMAL)
    assert (eta.eta.average(CP112_WEIGHTS) - eta.eta).is_zero()
    assert eta.d_eta.is_closed()
    # degree 3 perturbations of CP(1,1,2) are already phi-invariant
    assert (eta.d_eta.average(PHI_WEIGHTS) - eta.d_eta).is_zero()

    default = random_admissible_eta(CP112_WEIGHTS, CP112_NORMAL, seed=1)
    assert default.degree == 4
    assert not (default.d_eta.average(PHI_WEIGHTS) - default.d_eta).is_zero()

    again = random_admissible_eta(CP112_WEIGHTS, CP112_NORMAL, degree=3, seed=1)
    assert again == eta
    other = random_admissible_eta(CP112_WEIGHTS, CP112_NORMAL, degree=3, seed=2)
    assert other != eta


def _generator(weights, u):
    out = np.zeros_like(u)
    for j, w in enumerate(weights):
        out[2 * j], out[2 * j + 1] = -w * u[2 * j + 1], w * u[2 * j]
    return out


def test_admissible_eta_is_horizontal():
    weights = [[1, 1, 2, 0], [0, 0, -1, -1]]
    eta = random_admissible_eta(weights, (0, 1, 3), degree=4, seed=4)
    assert not eta.eta.is_zero()
    assert vanishes_to_second_order(eta.eta, (0, 1, 3))
    rng = np.random.default_rng(4)
    for _ in range(10):
        u = rng.normal(size=8)
        values, two_form = eta.eta(u), eta.d_eta(u)
        for row in weights:
            Y = _generator(row, u)
            assert abs(values @ Y) < 1e-12
            assert np.max(np.abs(Y @ two_form)) < 1e-10


def test_degree_three_with_opposite_weights():
    # z0 z1 is invariant under (1, -1, 2) but has phi-weight 2
    weights, normal = [[1, -1, 2]], (0, 1)
    pairs = horizontal_pairs(weights, normal, 3)
    assert (((1, 0, 0), (1, 0, 0)), ((1, 1, 0), (0, 0, 0))) in pairs
    eta = random_admissible_eta(weights, normal, degree=3, seed=5)
    assert eta.degree == 3
    assert vanishes_to_second_order(eta.eta, normal)
    sigma = eta.d_eta.average(PHI_WEIGHTS) - eta.d_eta
    assert not sigma.is_zero()
    alpha = sigma.radial_primitive(normal)
    assert not alpha.is_zero()
    assert (alpha.d() - sigma).is_zero()


def test_random_admissible_eta_degree():
    with pytest.raises(InputError):
        random_admissible_eta(CP112_WEIGHTS, CP112_NORMAL, degree=2)


def test_vanishing_order():
    x0, y0, x1, y1 = real_symbols(2)
    assert not vanishes_to_second_order(PolyOneForm(2, (x0, 0, 0, 0)), [0])
    assert vanishes_to_second_order(PolyOneForm(2, (x0 * y0, 0, 0, x0 ** 2 * x1)), [0])
    assert not vanishes_to_second_order(PolyOneForm(2, (x1, 0, 0, 0)), [0])
    zero = PerturbationForm.zero(2)
    assert zero.eta.is_zero() and zero.d_eta.is_zero()
    assert zero.degree == 0


def main():
    test_exterior_derivative()
    test_average_keeps_invariant_terms()
    test_radial_primitive()
    test_random_admissible_eta()
    print("All forms tests passed.")


if __name__ == "__main__":
    main()
