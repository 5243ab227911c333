"""
Test script for the lattice module.

Demonstrates:
1. Smith normal form against the minors oracle
2. Stabilisers of coordinate supports
3. Brute-force roots-of-unity agreement
4. Circle isotropy orders and residues
"""

import itertools
import math
import os
import sys
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbires.errors import InputError, PreconditionError
from orbires.lattice import (
    INFINITE,
    IntMatrix,
    StabilizerGroup,
    circle_isotropy_order,
    residues,
    smith_normal_form,
    stabilizer,
    stabilizer_generators,
)


def _minor_gcd(M: IntMatrix, size: int) -> int:
    g = 0
    for rows in itertools.combinations(range(M.rows), size):
        for cols in itertools.combinations(range(M.cols), size):
            g = math.gcd(g, M.select_rows(rows).select_columns(cols).determinant())
    return g


def _brute_order(A: IntMatrix, support, denominator: int) -> int:
    """Elements of (Z/denominator)^k fixing every coordinate in the support."""
    count = 0
    for p in itertools.product(range(denominator), repeat=A.rows):
        if all(sum(p[r] * A[r, j] for r in range(A.rows)) % denominator == 0 for j in support):
            count += 1
    return count


def test_smith_normal_form_small():
    print("=" * 70)
    print("TEST 1: Smith normal form of [[2,4],[6,8]]")
    print("=" * 70)

    M = IntMatrix.from_rows([[2, 4], [6, 8]])
    snf = smith_normal_form(M)
    print(f"diagonal: {snf.diagonal()}")
    assert snf.diagonal() == (2, 4)
    assert snf.U @ M @ snf.V == snf.D
    assert abs(snf.U.determinant()) == 1
    assert abs(snf.V.determinant()) == 1


def test_smith_normal_form_zero_and_empty():
    assert smith_normal_form(IntMatrix.zeros(2, 3)).diagonal() == (0, 0)
    assert IntMatrix.from_rows([[0, 0]]).rank() == 0


def test_smith_normal_form_minors_oracle():
    print("=" * 70)
    print("TEST 2: Invariant factors agree with gcds of minors")
    print("=" * 70)

    rng = np.random.default_rng(7)
    for _ in range(40):
        rows, cols = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        M = IntMatrix.from_rows(rng.integers(-6, 7, size=(rows, cols)).tolist())
        snf = smith_normal_form(M)
        assert snf.U @ M @ snf.V == snf.D
        diagonal = snf.diagonal()
        assert all(d >= 0 for d in diagonal)
        product = 1
        for i, d in enumerate(diagonal):
            product *= d
            assert product == _minor_gcd(M, i + 1)
            if i + 1 < len(diagonal) and d:
                assert diagonal[i + 1] % d == 0
    print("40 random matrices OK")


def test_smith_normal_form_deterministic():
    M = IntMatrix.from_rows([[3, 5, 7], [2, 4, 6]])
    assert smith_normal_form(M) == smith_normal_form(M)


@pytest.mark.parametrize("weights, support, expected", [
    ([[1, 1, 2]], [2], StabilizerGroup(0, (2,))),
    ([[1, 1, 2]], [0, 2], StabilizerGroup(0, ())),
    ([[1, 0], [0, 1]], [0], StabilizerGroup(1, ())),
    ([[2, 3, 0], [0, -1, -1]], [0, 1], StabilizerGroup(0, (2,))),
    ([[2, 3]], [], StabilizerGroup(1, ())),
])
def test_stabilizer_examples(weights, support, expected):
    assert stabilizer(IntMatrix.from_rows(weights), support) == expected


def test_stabilizer_labels():
    assert StabilizerGroup(0, (2,)).label() == "Z2"
    assert StabilizerGroup(0, ()).label() == "trivial"
    assert StabilizerGroup(1, (3,)).label() == "T^1 x Z3"
    assert StabilizerGroup(1, ()).order == INFINITE
    assert StabilizerGroup(0, (2, 4)).order == 8


def test_stabilizer_out_of_range():
    with pytest.raises(InputError):
        stabilizer(IntMatrix.from_rows([[1, 2]]), [2])


def test_stabilizer_roots_of_unity_oracle():
    print("=" * 70)
    print("TEST 3: SNF stabilisers against brute force over roots of unity")
    print("=" * 70)

    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(60):
        k, n = int(rng.integers(1, 3)), int(rng.integers(2, 5))
        A = IntMatrix.from_rows(rng.integers(-4, 5, size=(k, n)).tolist())
        for size in range(1, n + 1):
            for support in itertools.combinations(range(n), size):
                group = stabilizer(A, support)
                if not group.is_finite:
                    continue
                exponent = group.torsion[-1] if group.torsion else 1
                if exponent > 50:
                    continue
                assert _brute_order(A, support, exponent) == group.order
                assert _brute_order(A, support, 2 * exponent) == group.order
                checked += 1
    print(f"{checked} finite stabilisers agree")
    assert checked > 0


def test_stabilizer_generators():
    gens = stabilizer_generators(IntMatrix.from_rows([[1, 1, 2]]), [2])
    assert gens == [((Fraction(1, 2),), 2)]

    with pytest.raises(PreconditionError):
        stabilizer_generators(IntMatrix.from_rows([[1, 0], [0, 1]]), [0])


def test_circle_isotropy_order():
    assert circle_isotropy_order((2, 3), [0]) == 2
    assert circle_isotropy_order((2, 3), [0, 1]) == 1
    assert circle_isotropy_order((4, 6, 1), [0, 1]) == 2
    assert circle_isotropy_order((0, 0), [0, 1]) == INFINITE
    with pytest.raises(InputError):
        circle_isotropy_order((2, 3), [])


def test_residues():
    assert residues((5, -1, 2), 3) == (2, 2, 2)
    assert residues((1, 1, 2), 2) == (1, 1, 0)
    with pytest.raises(InputError):
        residues((1, 2), 1)


def test_determinant():
    assert IntMatrix.from_rows([[2, 3], [0, -1]]).determinant() == -2
    assert IntMatrix.from_rows([[0, 1], [1, 0]]).determinant() == -1
    assert IntMatrix.identity(3).determinant() == 1


def main():
    test_smith_normal_form_small()
    test_smith_normal_form_minors_oracle()
    test_stabilizer_roots_of_unity_oracle()
    test_stabilizer_generators()
    test_circle_isotropy_order()
    test_residues()
    print("All lattice tests passed.")


if __name__ == "__main__":
    main()
