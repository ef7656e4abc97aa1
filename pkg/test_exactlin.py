"""
GROWTHLAB - EXACT LINEAR ALGEBRA TESTS
F2 matrices, Smith normal form and the rings Z[2cos(pi/N)]
"""

import itertools
import math

import numpy as np
import pytest
import sympy

from errors import DomainError, ShapeError
from exactlin import (F2Matrix, RingMatrix, f2_kernel, f2_rank, f2_solve, int_det, int_matrix,
                      real_cyclotomic_ring, ring_mat_mul, snf)


# ============================================================
# F2
# ============================================================

def test_f2_matrix_basics():
    m = F2Matrix.from_rows([[1, 0, 1], [0, 1, 1]])
    assert m.shape == (2, 3)
    assert m.entry(0, 2) == 1
    assert m.apply((1, 1, 0)) == (1, 1)
    assert m.transpose().to_rows() == [[1, 0], [0, 1], [1, 1]]
    assert F2Matrix.from_flat(m.to_flat(), 2, 3) == m
    assert (m + m).is_zero()


def test_f2_product_and_identity():
    m = F2Matrix.from_rows([[1, 1], [0, 1]])
    assert m @ m == F2Matrix.identity(2)
    assert F2Matrix.identity(2) @ m == m


def test_f2_rank():
    assert f2_rank(F2Matrix.identity(4)) == 4
    assert f2_rank(F2Matrix.zeros(3, 5)) == 0
    # rows sum to zero over F2
    assert f2_rank(F2Matrix.from_rows([[1, 1, 0], [0, 1, 1], [1, 0, 1]])) == 2


def test_f2_solve():
    a = F2Matrix.from_rows([[1, 1, 0], [0, 1, 1]])
    x = f2_solve(a, (1, 0))
    assert a.apply(x) == (1, 0)
    b = F2Matrix.from_rows([[1, 0], [1, 0]])
    assert f2_solve(b, (1, 0)) is None
    with pytest.raises(ShapeError):
        f2_solve(a, (1, 0, 1))


def test_f2_solve_agrees_with_exhaustive_search():
    rng = np.random.default_rng(11)
    for _ in range(200):
        rows, cols = rng.integers(1, 7, size=2)
        a = F2Matrix.from_array(rng.integers(0, 2, size=(rows, cols)))
        b = tuple(int(v) for v in rng.integers(0, 2, size=rows))
        solutions = [x for x in itertools.product((0, 1), repeat=int(cols)) if a.apply(x) == b]
        x = f2_solve(a, b)
        if solutions:
            assert x is not None
            assert a.apply(x) == b
        else:
            assert x is None


def test_f2_kernel():
    rng = np.random.default_rng(7)
    for _ in range(50):
        rows, cols = rng.integers(1, 6, size=2)
        m = F2Matrix.from_array(rng.integers(0, 2, size=(rows, cols)))
        kernel = f2_kernel(m)
        assert len(kernel) == cols - f2_rank(m)
        for v in kernel:
            assert not any(m.apply(v))


def test_inclusion_shape():
    inc = F2Matrix.inclusion(4, 2)
    assert inc.apply((1, 1)) == (1, 1, 0, 0)
    with pytest.raises(ShapeError):
        F2Matrix.inclusion(1, 2)


# ============================================================
# SMITH NORMAL FORM
# ============================================================

def test_snf_known_example():
    a = int_matrix([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    assert snf(a).diagonal == [2, 6, 12]


def test_snf_property_suite():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        rows, cols = (int(v) for v in rng.integers(1, 5, size=2))
        a = int_matrix(rng.integers(-6, 7, size=(rows, cols)).tolist())
        result = snf(a)
        product = result.U.dot(a).dot(result.V)
        assert (product == result.D).all()
        assert abs(int_det(result.U)) == 1
        assert abs(int_det(result.V)) == 1
        for i in range(rows):
            for j in range(cols):
                if i != j:
                    assert result.D[i, j] == 0
        diagonal = result.diagonal
        assert all(d >= 0 for d in diagonal)
        nonzero = [d for d in diagonal if d]
        assert nonzero == diagonal[:len(nonzero)]
        for d1, d2 in zip(nonzero, nonzero[1:]):
            assert d2 % d1 == 0


def test_snf_empty_and_rank():
    result = snf(int_matrix([], shape=(0, 3)))
    assert result.rank == 0
    assert snf(int_matrix([[1, 2], [2, 4]])).rank == 1


def test_int_det_matches_sympy():
    a = [[3, 1, 4], [1, 5, 9], [2, 6, 5]]
    assert int_det(int_matrix(a)) == sympy.Matrix(a).det()


# ============================================================
# REAL CYCLOTOMIC RINGS
# ============================================================

@pytest.mark.parametrize('n', [2, 3, 4, 5, 7, 8, 9])
def test_minpoly_matches_sympy(n):
    ring = real_cyclotomic_ring(n)
    x = sympy.Symbol('x')
    expected = sympy.Poly(sympy.minimal_polynomial(2 * sympy.cos(sympy.pi / n), x), x)
    assert list(ring.minpoly) == [int(c) for c in reversed(expected.all_coeffs())]
    assert ring.residual() < 1e-30


def test_ring_of_seven():
    ring = real_cyclotomic_ring(7)
    assert ring.degree == 3
    assert ring.minpoly == (1, -2, -1, 1)
    assert ring.two_cos(7) == ring.generator()
    assert ring.two_cos(2) == ring.zero
    assert ring.two_cos(3) == ring.one
    with pytest.raises(DomainError):
        ring.two_cos(5)


def test_two_cos_values():
    ring = real_cyclotomic_ring(12)
    for m in (2, 3, 4, 6, 12):
        assert abs(float(ring.evaluate(ring.two_cos(m))) - 2 * math.cos(math.pi / m)) < 1e-12


def test_ring_arithmetic_is_exact():
    ring = real_cyclotomic_ring(7)
    y = ring.generator()
    # y^3 = y^2 + 2y - 1
    cube = ring.mul(y, ring.mul(y, y))
    assert cube == (-1, 2, 1)
    a, b = (1, -2, 3), (0, 4, -1)
    assert ring.mul(a, b) == tuple(int(v) for v in ring.mul_matrix(a) @ np.array(b))
    value = float(ring.evaluate(ring.mul(a, b)))
    assert abs(value - float(ring.evaluate(a)) * float(ring.evaluate(b))) < 1e-9


def test_ring_rejects_bad_order():
    with pytest.raises(DomainError):
        real_cyclotomic_ring(1)


def test_ring_matrix_product():
    ring = real_cyclotomic_ring(5)
    y = ring.generator()
    m = RingMatrix(ring, ((y, ring.one), (ring.zero, ring.one)))
    identity = RingMatrix.identity(ring, 2)
    assert ring_mat_mul(identity, m) == m
    assert m.power(2) == m @ m
    with pytest.raises(DomainError):
        ring_mat_mul(m, RingMatrix.identity(real_cyclotomic_ring(7), 2))
    with pytest.raises(ShapeError):
        ring_mat_mul(m, RingMatrix.identity(ring, 3))


def _random_ring_matrix(ring, rng, size=3):
    return RingMatrix.from_array(ring, rng.integers(-3, 4, size=(size, size, ring.degree)))


@pytest.mark.parametrize('n', [5, 7, 12])
def test_ring_mat_mul_is_associative(n):
    ring = real_cyclotomic_ring(n)
    rng = np.random.default_rng(n)
    for _ in range(30):
        a, b, c = (_random_ring_matrix(ring, rng) for _ in range(3))
        assert ring_mat_mul(ring_mat_mul(a, b), c) == ring_mat_mul(a, ring_mat_mul(b, c))
