import math
from fractions import Fraction as F

import numpy as np
import pytest

from jmkd import expr as ex
from jmkd.expr import T, X, Y
from jmkd.quadrature import (ConvergenceError, SingularIntervalError, antiderivative_value, unit_integral,
                             unit_integral_gl)


def test_polynomial_integral():
    assert antiderivative_value(ex.mul(2, T), "t", 0, 3.0, {}) == pytest.approx(9.0, abs=1e-10)


def test_exponential_integral():
    assert antiderivative_value(ex.exp(T), "t", 0, 1.0, {}) == pytest.approx(math.e - 1, abs=1e-9)


def test_nested_constant_integral():
    # the inner integral of 1 in y folds to y; integrating that again gives y^2/2
    inner = ex.antideriv(ex.ONE, "y")
    assert inner == Y
    assert antiderivative_value(inner, "y", 0, 1.0, {}) == pytest.approx(0.5, abs=1e-9)
    nested = ex.antideriv(ex.mul(X, Y, ex.exp(X)), "x")
    assert antiderivative_value(nested, "y", 0, 1.0, {"x": 1.0}) == pytest.approx(0.5, abs=1e-9)


def test_two_rules_agree():
    f = lambda s: np.exp(np.sin(3 * s)) / (1 + s * s)  # noqa: E731
    gk = unit_integral(lambda s: f(s)[None, :], 1e-10)
    gl = unit_integral_gl(lambda s: f(s)[None, :], 1e-10)
    assert abs(gk[0] - gl[0]) <= 2e-10


def test_fundamental_theorem_numerically():
    g = ex.add(ex.sin(ex.mul(3, T)), ex.power(T, 2))
    h = 1e-4
    for u in (0.3, 0.9, 1.7):
        d = (antiderivative_value(g, "t", 0, u + h, {}) - antiderivative_value(g, "t", 0, u - h, {})) / (2 * h)
        exact = math.sin(3 * u) + u * u
        assert d == pytest.approx(exact, rel=1e-6)


def test_context_variables_are_held_fixed():
    g = ex.mul(X, T)
    assert antiderivative_value(g, "t", 0, 2.0, {"x": 3.0}) == pytest.approx(6.0, abs=1e-10)


def test_nonzero_base_point():
    assert antiderivative_value(ex.mul(2, T), "t", 1, 3.0, {}) == pytest.approx(8.0, abs=1e-10)


def test_pole_inside_interval_raises():
    with pytest.raises(SingularIntervalError):
        antiderivative_value(ex.power(ex.add(T, F(-1, 2)), -1), "t", 0, 1.0, {})


def test_depth_cap_reports_nonconvergence():
    with pytest.raises(ConvergenceError):
        unit_integral(lambda s: np.sign(s - 1 / 3)[None, :] * 1e3, 1e-14, max_depth=3)
