from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2hol.exactnum import SQRT2, ExactMatrix, Scalar, nullspace, rank, rref, solve
from g2hol.exactnum import matvec

small = st.fractions(min_value=-20, max_value=20, max_denominator=12)
scalars = st.builds(Scalar, small, small)
nonzero = scalars.filter(lambda s: not s.is_zero())


def test_sqrt2_squares_to_two():
    assert SQRT2 * SQRT2 == Scalar(2)
    assert (Scalar(1, 1) * Scalar(1, -1)) == Scalar(-1)


def test_float_and_repr_values():
    assert float(Scalar(Fraction(1, 2), 1)) == pytest.approx(0.5 + 2**0.5)
    assert Scalar(3) == 3


@given(scalars, scalars, scalars)
def test_field_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert x - x == Scalar(0)


@given(nonzero)
def test_inverse(x):
    assert x * x.inverse() == Scalar(1)
    assert x / x == Scalar(1)


@given(scalars, scalars)
def test_ordering_agrees_with_floats(x, y):
    fx, fy = float(x), float(y)
    if abs(fx - fy) > 1e-9:
        assert (x < y) == (fx < fy)
    assert x.sign() == (0 if x.is_zero() else (1 if fx > 0 else -1))


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        Scalar(0).inverse()


def test_rejects_unknown_types():
    with pytest.raises(TypeError):
        Scalar(1j)


def test_matrix_product_and_identity():
    a = ExactMatrix.from_rows([[1, 2], [3, SQRT2]])
    i = ExactMatrix.identity(2)
    assert a @ i == a
    assert (a @ a)[1, 1] == Scalar(6) + SQRT2 * SQRT2
    assert a.T[0, 1] == Scalar(3)
    assert a.trace() == Scalar(1, 1)


def test_rref_and_rank_small():
    m = ExactMatrix.from_rows([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    rows, piv = rref(m)
    assert piv == [0, 1]
    assert rank(m) == 2
    ns = nullspace(m)
    assert len(ns) == 1
    assert all(v.is_zero() for v in matvec(m, ns[0]))


def test_solve_consistent_and_inconsistent():
    m = ExactMatrix.from_rows([[1, 1], [1, -1]])
    x = solve(m, [Scalar(3), Scalar(1)])
    assert x == [Scalar(2), Scalar(1)]
    sing = ExactMatrix.from_rows([[1, 1], [2, 2]])
    assert solve(sing, [Scalar(1), Scalar(3)]) is None
    with pytest.raises(ValueError):
        solve(m, [Scalar(1)])


def test_rank_with_sqrt2_dependency():
    # second row is sqrt2 times the first: rank 1 over Q(sqrt2), rank 2 over Q
    m = ExactMatrix.from_rows([[1, SQRT2], [SQRT2, 2]])
    assert rank(m) == 1


int_mats = st.lists(st.lists(st.integers(-3, 3), min_size=5, max_size=5), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(int_mats)
def test_rank_matches_numpy_and_nullspace_is_kernel(rows):
    m = ExactMatrix.from_rows(rows)
    assert rank(m) == np.linalg.matrix_rank(np.array(rows, dtype=float))
    ns = nullspace(m)
    assert len(ns) == 5 - rank(m)
    for n in ns:
        assert all(v.is_zero() for v in matvec(m, n))


@settings(max_examples=40, deadline=None)
@given(int_mats, st.lists(st.integers(-3, 3), min_size=5, max_size=5))
def test_solve_recovers_a_solution(rows, x0):
    m = ExactMatrix.from_rows(rows)
    rhs = matvec(m, [Scalar(v) for v in x0])
    x = solve(m, rhs)
    assert x is not None
    assert matvec(m, x) == rhs
