from fractions import Fraction as F

import pytest

from jmkd import coeffs as C
from jmkd.poly import Poly

t, z, x = Poly.symbol("t"), Poly.symbol("z"), Poly.symbol("x")
beta, eta = Poly.symbol("beta"), Poly.symbol("eta")


def g(i):
    return C.gamma_sym(i)


def test_laurent_degree_zero():
    tab = C.jm_laurent_coeffs(0)
    assert tab[0] == g(0)
    assert tab[-1] == 2 * g(0) * beta - 2 * Poly.symbol(C.BETA_INT) + g(-1)
    assert not tab.mismatches()


@pytest.mark.parametrize("n", range(0, 6))
def test_laurent_closed_forms(n):
    assert not C.jm_laurent_coeffs(n).mismatches()


@pytest.mark.parametrize("n", range(3, 7))
def test_xpoly_leading_terms(n):
    tab = C.jm_xpoly_coeffs(n)
    assert tab[n] == g(n)
    # with phi = 0 the integral I vanishes
    assert tab[n - 1].subs({"I": 0, "gtz": 0}) == n * g(n - 1)
    assert not tab.mismatches()


def test_flag_basis():
    a, b = F(2), F(1, 3)
    assert C.flag_poly(0, a, b) == Poly.const(1)
    assert C.flag_poly(1, a, b) == x + ((b - a**3) / a) * t
    for n in range(9):
        assert C.flag_residual(C.flag_poly(n, a, b), a, b).is_zero()


def test_flag_requires_nonzero_a():
    with pytest.raises(C.InvalidConstantError):
        C.flag_poly(2, 0, 1)


def test_log_poly_first_degree():
    k = F(1, 2)
    tab = C.jm_log_poly_coeffs(1, k, {0: F(3)})
    assert tab[1] == Poly.const(1)
    assert tab[0] == F(3, 2) * k * t + 3
    for n in range(1, 6):
        assert not C.jm_log_poly_coeffs(n, k, {i: F(i + 1) for i in range(n)}).mismatches()


def test_ypoly_g_second_degree():
    b = F(1, 3)
    tab = C.jm_ypoly_g_coeffs(2, b, {0: F(2), 1: F(5)})
    assert tab[2] == Poly.const(2)
    assert tab[1] == 2 * (2 * b / 3) * (2 * z + 5)
    assert not tab.mismatches()


def test_travel_second_degree():
    tab = C.kd_travel_coeffs(2, 2, F(1, 3), {0: F(4), 1: F(7)})
    assert tab[2] == Poly.const(1)
    assert tab[1] == Poly.const(7)
    assert tab[0] == -2 * eta + 4
    assert not tab.mismatches("derived")


def test_travel_recurrence_is_consistent():
    for n in range(1, 8):
        C.kd_travel_coeffs(n, 3, -1, {j: F(j - 2) for j in range(n + 1)})


def test_d_sequence():
    a, b = F(2), F(1, 3)
    d = C.d_sequence(4, a, b)
    assert d[0] == Poly.const(1)
    assert d[1] == 12 * b * b / (a * a) * t
    for m in range(5):
        assert d[m] == C.d_closed(m, a, b)


def test_e_closed_form():
    assert not C.e_check(10).mismatches()


def test_kd_ypoly_degree_zero():
    tab = C.kd_ypoly_coeffs(0, 2, F(1, 3), {0: F(5)})
    assert tab.extras["g"][0] == Poly.const(5)


def test_kd_ypoly_derived_forms_match():
    for n in range(0, 5):
        assert not C.kd_ypoly_coeffs(n, 2, F(1, 3), {p: F(p + 1, 2) for p in range(n + 1)}).mismatches("derived")


def test_report_is_deterministic():
    r1 = C.discrepancy_report(C.standard_tables(n_max=3))
    r2 = C.discrepancy_report(C.standard_tables(n_max=3))
    assert r1 == r2
    assert '"summary"' in r1


def test_discrepancies_are_recorded_not_raised():
    tab = C.flag_table(6, 2, F(1, 3))
    assert len(tab.discrepancies) == 7
    for d in tab.mismatches():
        assert d.recurrence_value != d.closed_form_value
