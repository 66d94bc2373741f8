from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from jmkd import expr as ex
from jmkd.poly import NotPolynomialError, Poly, RationalFunction

x, y = Poly.symbol("x"), Poly.symbol("y")


def test_arithmetic_and_equality():
    p = (x + 1) ** 2
    assert p == x * x + 2 * x + 1
    assert (p - p).is_zero()
    assert p.degree("x") == 2 and p.coeff("x", 1) == Poly.const(2)
    assert p.eval({"x": F(1, 2)}) == F(9, 4)


def test_calculus():
    p = x**3 * y + 4 * y
    assert p.diff("x", 2) == 6 * x * y
    assert p.integrate("y").diff("y") == p
    assert (x**2).integrate("x") == x**3 / 3


def test_substitution():
    assert (x * y).subs({"y": x + 1}) == x * x + x


def test_round_trip_through_expressions():
    p = F(3, 2) * x**2 * y - y + 7
    assert Poly.from_expr(p.to_expr()) == p


def test_non_polynomial_rejected():
    with pytest.raises(NotPolynomialError):
        Poly.from_expr(ex.sin(ex.X))
    with pytest.raises(NotPolynomialError):
        Poly.from_expr(ex.power(ex.X, -1))


def test_rational_function_zero_test():
    e = ex.add(ex.div(1, ex.X), ex.div(ex.neg(ex.Y), ex.mul(ex.X, ex.Y)))
    assert RationalFunction.from_expr(e).is_zero()


coef = st.fractions(-5, 5, max_denominator=5)


@given(st.lists(coef, min_size=1, max_size=5), st.lists(coef, min_size=1, max_size=5))
def test_product_degree_and_leibniz(c1, c2):
    p = sum((c * x**i for i, c in enumerate(c1)), Poly())
    q = sum((c * x**i for i, c in enumerate(c2)), Poly())
    assert (p * q).diff("x") == p.diff("x") * q + p * q.diff("x")
