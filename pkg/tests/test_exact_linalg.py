from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from raumproblem.exact_linalg import (
    RatMatrix, ShapeError, annihilator, combine, inverse, nullspace, parse_rational, rank, rref,
    solve_membership,
)


def small_matrices(max_rows=5, max_cols=6):
    return st.integers(1, max_rows).flatmap(lambda r: st.integers(1, max_cols).flatmap(
        lambda c: st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=4),
                           min_size=r * c, max_size=r * c).map(lambda e: RatMatrix(r, c, e))))


def to_sympy(m):
    return sp.Matrix(m.rows, m.cols, [sp.Rational(e.numerator, e.denominator) for e in m.entries])


def test_parse_rational():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational("-7") == Fraction(-7)
    assert parse_rational(4) == 4
    with pytest.raises(ValueError):
        parse_rational("0.5")
    with pytest.raises(ValueError):
        parse_rational("1/0x")


def test_canonical_form_is_lowest_terms():
    m = RatMatrix(1, 2, [Fraction(2, 4), Fraction(-3, 9)])
    assert [(e.numerator, e.denominator) for e in m.entries] == [(1, 2), (-1, 3)]


def test_identity_rref():
    r, piv, rk = rref(RatMatrix.identity(3))
    assert r == RatMatrix.identity(3) and piv == (0, 1, 2) and rk == 3


def test_rank_deficient_example():
    m = RatMatrix.from_rows([[1, 2], [2, 4]])
    r, piv, rk = rref(m)
    assert rk == 1 and piv == (0,)
    assert r == RatMatrix.from_rows([[1, 2], [0, 0]])
    (v,) = nullspace(m)
    assert v.flatten() == (-2, 1)


def test_zero_matrix():
    m = RatMatrix.zeros(2, 3)
    assert rank(m) == 0
    assert len(nullspace(m)) == 3


@settings(max_examples=60, deadline=None)
@given(small_matrices())
def test_rref_matches_sympy(m):
    r, piv, rk = rref(m)
    sr, spiv = to_sympy(m).rref()
    assert to_sympy(r) == sr
    assert piv == spiv and rk == len(spiv)


@settings(max_examples=60, deadline=None)
@given(small_matrices())
def test_rank_nullity_and_kernel(m):
    ns = nullspace(m)
    assert rank(m) + len(ns) == m.cols
    for v in ns:
        assert (m @ v).is_zero()


@settings(max_examples=40, deadline=None)
@given(small_matrices(4, 4), st.lists(st.fractions(-3, 3, max_denominator=3), min_size=4, max_size=4))
def test_membership_roundtrip(m, coeffs):
    span = [RatMatrix.column(m.transpose().row(j)) for j in range(m.cols)]
    target = combine(coeffs[:len(span)], span)
    c = solve_membership(span, target)
    assert c is not None and combine(c, span) == target


def test_membership_rejects_outside_vector():
    span = [RatMatrix.column([1, 0, 0]), RatMatrix.column([0, 1, 0])]
    assert solve_membership(span, RatMatrix.column([0, 0, 1])) is None
    with pytest.raises(ShapeError):
        solve_membership(span, RatMatrix.column([0, 1]))


def test_annihilator_vanishes_on_span():
    vecs = [RatMatrix.column([1, 2, 3, 4]), RatMatrix.column([0, 1, Fraction(1, 2), 0])]
    funcs = annihilator(vecs)
    assert len(funcs) == 2
    for f in funcs:
        for v in vecs:
            assert sum(a * b for a, b in zip(f, v.flatten())) == 0


def test_inverse_and_singular():
    m = RatMatrix.from_rows([[2, 1], [Fraction(1, 3), 1]])
    assert m @ inverse(m) == RatMatrix.identity(2)
    with pytest.raises(ZeroDivisionError):
        inverse(RatMatrix.from_rows([[1, 2], [2, 4]]))


def test_shape_errors():
    with pytest.raises(ShapeError):
        RatMatrix(2, 2, [1, 2, 3])
    with pytest.raises(ShapeError):
        RatMatrix.identity(2) + RatMatrix.identity(3)
    with pytest.raises(ShapeError):
        RatMatrix.zeros(2, 3) @ RatMatrix.zeros(2, 3)


def test_immutable_and_json_roundtrip():
    m = RatMatrix.from_rows([[Fraction(1, 2), -3]])
    with pytest.raises(AttributeError):
        m.rows = 3
    assert RatMatrix.from_json(m.to_json()) == m
    assert m.to_json() == [["1/2", "-3"]]
