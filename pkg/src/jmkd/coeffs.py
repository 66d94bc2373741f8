"""Coefficient sequences of the solution families.

Every table is produced by integrating the governing recurrence in exact
arithmetic; the recurrence output is the ground truth.  Where a closed form
for the same sequence is known it is evaluated independently and compared,
and each comparison becomes a :class:`Discrepancy` record (``match`` true or
false).  Coefficients are :class:`~jmkd.poly.Poly` objects whose
indeterminates are either coordinates (``t``, ``z``, ``eta`` ...) or stand-ins
for parameter functions (``beta``, ``gamma[3]`` ...).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping

from . import expr as ex
from .parser import to_text
from .poly import Poly, poly_sum

F = Fraction


class InvalidConstantError(ValueError):
    pass


class RecurrenceError(ArithmeticError):
    """A recurrence turned out to be incompatible (should never happen)."""


def _prod(it) -> Fraction:
    out = F(1)
    for v in it:
        out *= v
    return out


def falling(n: int, m: int) -> Fraction:
    """n (n-1) ... (n-m+1); empty product is 1."""
    return _prod(F(n - s) for s in range(m))


def binom(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


def _fact(n: int) -> int:
    if n < 0:
        raise ValueError("negative factorial")
    return math.factorial(n)


def text_of(v) -> str:
    if isinstance(v, Poly):
        v = v.to_expr()
    if isinstance(v, ex.Expr):
        return to_text(v, strict=False)
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


def _plain(v):
    if isinstance(v, Fraction):
        return text_of(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in sorted(v.items(), key=lambda kv: str(kv[0]))}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# tables and reports


@dataclass
class Discrepancy:
    family: str
    quantity: str
    index: Any
    recurrence_value: str
    closed_form_value: str | None
    match: bool
    form: str = "printed"
    inputs: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "quantity": self.quantity,
            "index": self.index,
            "form": self.form,
            "match": self.match,
            "recurrenceValue": self.recurrence_value,
            "closedFormValue": self.closed_form_value,
            "inputs": _plain(self.inputs),
            "note": self.note,
        }


@dataclass
class CoeffTable:
    family: str
    index_range: tuple[int, int]
    coeffs: dict
    provenance: str = "recurrence"
    discrepancies: list[Discrepancy] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return self.coeffs[k]

    def compare(self, quantity: str, index, closed, *, form: str = "printed", inputs=None,
                note: str = "") -> Discrepancy:
        rec = self.coeffs[index] if not isinstance(index, tuple) or index in self.coeffs else None
        return self.compare_values(quantity, index, rec, closed, form=form, inputs=inputs, note=note)

    def compare_values(self, quantity: str, index, rec, closed, *, form: str = "printed", inputs=None,
                       note: str = "") -> Discrepancy:
        ok = closed is not None and rec == closed
        d = Discrepancy(self.family, quantity, list(index) if isinstance(index, tuple) else index,
                        text_of(rec), None if closed is None else text_of(closed), bool(ok), form,
                        dict(inputs or {}), note)
        self.discrepancies.append(d)
        return d

    def mismatches(self, form: str | None = None) -> list[Discrepancy]:
        return [d for d in self.discrepancies if not d.match and (form is None or d.form == form)]


def discrepancy_report(tables: list[CoeffTable]) -> str:
    """Deterministic JSON document with every comparison of ``tables``."""
    records = [d.to_json() for t in tables for d in t.discrepancies]
    return json.dumps({"records": records,
                       "summary": {"total": len(records),
                                   "mismatches": sum(1 for r in records if not r["match"])}},
                      indent=2, sort_keys=True) + "\n"


def _idx(seq: Mapping[int, Any] | None, i: int, default=F(0)):
    if seq is None:
        return default
    return seq.get(i, default)


def gamma_sym(i: int) -> Poly:
    return Poly.symbol(f"gamma[{i}]")


# ---------------------------------------------------------------------------
# quadratic-in-x Jimbo-Miwa family with pole coefficient (Laurent in P = 9/2 t + beta)

BETA_INT = "Ibz"  # stand-in for the y-antiderivative of beta_z


def jm_laurent_coeffs(n: int, tail: int = 3) -> CoeffTable:
    """Laurent coefficients ``B_m`` of the linear-in-x coefficient.

    ``B_m`` is a polynomial in the symbols ``beta``, ``gamma[j]`` and ``Ibz``
    (the y-antiderivative of ``beta_z``).  The solution uses ``m = -1..n``;
    ``tail`` further coefficients ``m = -2, -3, ...`` are generated from
    ``gamma[-2], gamma[-3], ...`` for comparison only.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    table = CoeffTable("JM-P2B", (-1 - tail, n), {})
    B = table.coeffs

    def c(m: int) -> Fraction:
        return F(-(m + 2) * (3 * m + 1), 3 * m + 4)

    B[n] = gamma_sym(n)
    for m in range(n - 1, -1, -1):
        B[m] = c(m) * B[m + 1].integrate("beta") + gamma_sym(m)
    B[-1] = 2 * B[0].integrate("beta") - 2 * Poly.symbol(BETA_INT) + gamma_sym(-1)
    B[-2] = gamma_sym(-2)
    for m in range(-3, -2 - tail, -1):
        B[m] = c(m) * B[m + 1].integrate("beta") + gamma_sym(m)

    beta = Poly.symbol("beta")
    inputs = {"n": n}
    for m in range(0, n + 1):
        closed = poly_sum(
            F((-1) ** (n - m + r) * (3 * m + 1), 3 * (n - r) + 1) * binom(n + 1 - r, m + 1)
            * beta ** (n - m - r) * gamma_sym(n - r)
            for r in range(n - m + 1))
        table.compare("B", m, closed, inputs=inputs)
    closed = poly_sum(F(2 * (-1) ** (n + r), 3 * (n - r) + 1) * gamma_sym(n - r) * beta ** (n - r + 1)
                      for r in range(n + 1)) - 2 * Poly.symbol(BETA_INT) + gamma_sym(-1)
    table.compare("B", -1, closed, inputs=inputs)
    for l in range(0, tail):
        closed = poly_sum(F(3 * l + 5, 3 * m + 5) * binom(l, m) * gamma_sym(-2 - m) * beta ** (l - m)
                          for m in range(l + 1))
        table.compare("B", -l - 2, closed, inputs=inputs, note="tail coefficient, not used by the builder")
    return table


# ---------------------------------------------------------------------------
# degree-n polynomial-in-x Jimbo-Miwa family

def jm_xpoly_coeffs(n: int) -> CoeffTable:
    """Reduced coefficients ``At_j`` with ``A_j = At_j * (g - z)^(-j)``, j = 2..n.

    ``At_j`` is a polynomial in ``I`` (the z-antiderivative of
    ``phi / (g - z)``), the ``gamma[j]`` and, for j = 2, the stand-in ``gtz``
    for ``g'(t) * z``.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    table = CoeffTable("JM-PN", (2, n), {})
    A = table.coeffs
    A[n] = gamma_sym(n)
    for j in range(n - 1, 2, -1):
        A[j] = (j + 1) * A[j + 1].integrate("I") + falling(n, n - j) * gamma_sym(j)
    A[2] = 3 * A[3].integrate("I") + falling(n, n - 2) * gamma_sym(2) - Poly.symbol("gtz") / 3
    I = Poly.symbol("I")
    inputs = {"n": n}
    for m in range(0, n - 2):
        closed = falling(n, m) * poly_sum(gamma_sym(n - s) * I ** (m - s) / _fact(m - s) for s in range(m + 1))
        table.compare("A", n - m, closed, inputs=inputs)
    closed = falling(n, n - 2) * poly_sum(gamma_sym(n - s) * I ** (n - 2 - s) / _fact(n - 2 - s)
                                          for s in range(n - 1)) - Poly.symbol("gtz") / 3
    table.compare("A", 2, closed, inputs=inputs)
    return table


# ---------------------------------------------------------------------------
# flag-type equation


def flag_operator(p: Poly, a: Fraction, b: Fraction) -> Poly:
    """Right side of phi_t = (1/2) L phi for the flag-type equation."""
    mu = 2 * (a**3 - b) / a
    return -p.diff("x", 3) + 3 * a * p.diff("x", 2) - mu * p.diff("x")


def flag_residual(p: Poly, a, b) -> Poly:
    a, b = F(a), F(b)
    return (p.diff("x", 3) - 3 * a * p.diff("x", 2) + 3 * a * a * p.diff("x") + 2 * p.diff("t")
            - (a**3 + 2 * b) / a * p.diff("x"))


def flag_poly(n: int, a, b) -> Poly:
    """Polynomial solution of the flag-type equation with leading term x^n.

    Built degree by degree: the coefficient of t^j is (1/(2j)) L applied to
    the coefficient of t^(j-1), which lowers the x-degree by at least one.
    """
    a, b = F(a), F(b)
    if a == 0:
        raise InvalidConstantError("a must be nonzero")
    if n < 0:
        raise ValueError("n must be >= 0")
    layer = Poly.symbol("x", n)
    out = layer
    t = Poly.symbol("t")
    for j in range(1, n + 1):
        layer = flag_operator(layer, a, b) / (2 * j)
        if layer.is_zero():
            break
        out = out + layer * t**j
    return out


def flag_poly_printed(n: int, a, b) -> Poly:
    a, b = F(a), F(b)
    out = Poly()
    x, t = Poly.symbol("x"), Poly.symbol("t")
    for r1 in range(n // 3 + 1):
        for r2 in range((n - 3 * r1) // 2 + 1):
            for r3 in range(n - 3 * r1 - 2 * r2 + 1):
                D = 3 * r1 + 2 * r2 + r3
                c = (F((-1) ** (r1 + r3)) * 3**r2 * a**r2 * (a**3 - b) ** r3 / 2 ** (r1 + r2)
                     * _prod(F(n - s) for s in range(D + 2)) / _fact(r1 + r2 + r3))
                out = out + c * x ** (n - D) * t ** (r1 + r2 + r3)
    return out


def flag_table(n_max: int, a, b) -> CoeffTable:
    a, b = F(a), F(b)
    table = CoeffTable("JM-L4", (0, n_max), {})
    for n in range(n_max + 1):
        table.coeffs[n] = flag_poly(n, a, b)
        table.compare("phi", n, flag_poly_printed(n, a, b), inputs={"n": n, "a": a, "b": b},
                      note="printed basis element")
    return table


# ---------------------------------------------------------------------------
# logarithmic Jimbo-Miwa family with polynomial-in-x f


def jm_log_poly_coeffs(n: int, k, k_r: Mapping[int, Fraction] | None = None) -> CoeffTable:
    """``A_m(t)`` (m = 0..n) with ``A_n = 1``; ``A_0`` omits its additive eta(y + k z).

    Integration constants: ``A_{n-s}(0) = n (n-1) ... (n-s+1) * k_{n-s}``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = F(k)
    kr = {i: F(v) for i, v in (k_r or {}).items()}
    kr[n] = F(1)
    table = CoeffTable("JM-L1", (0, n), {})
    A = table.coeffs
    A[n] = Poly.const(1)
    zero = Poly()
    for m in range(n - 1, -1, -1):
        rhs = (3 * k * (m + 1) * A[m + 1] - (m + 3) * (m + 2) * (m + 1) * A.get(m + 3, zero)) / 2
        A[m] = rhs.integrate("t") + falling(n, n - m) * kr.get(m, F(0))
    t = Poly.symbol("t")
    inputs = {"n": n, "k": k, "k_r": {i: v for i, v in kr.items()}}
    for s in range(0, n + 1):
        closed = Poly()
        for r in range(s + 1):
            for p in range(r // 2 + 1):
                idx = n - r + 2 * p
                kv = kr.get(idx, F(0)) if idx <= n else F(0)
                if s - r - p < 0:
                    continue
                closed = closed + (falling(n, s) * (-1) ** p * binom(s - r, p) * F(1, 2) ** p
                                   * (F(3, 2) * k) ** (s - r - p) * kv / _fact(s - r)) * t ** (s - r)
        table.compare("A", n - s, closed, inputs=inputs)
    return table


# ---------------------------------------------------------------------------
# logarithmic Jimbo-Miwa family f = x + g(y, z) + h(t, z)


def jm_ypoly_g_coeffs(n: int, b, k_r: Mapping[int, Fraction] | None = None) -> CoeffTable:
    """``a_m(z)`` for g = sum a_m y^m; ``a_0`` carries the symbol ``F`` as ``-F``.

    Integration constants: ``a_{n-m}(0) = n...(n-m+1) (2b/3)^m k_m``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    b = F(b)
    kr = {i: F(v) for i, v in (k_r or {}).items()}
    table = CoeffTable("JM-L3", (0, n), {})
    a = table.coeffs
    c = 2 * b / 3
    a[n] = Poly.const(kr.get(0, F(0)))
    for m in range(1, n + 1):
        j = n - m
        a[j] = (c * (j + 1) * a[j + 1]).integrate("z") + falling(n, m) * c**m * kr.get(m, F(0))
    a[0] = a[0] - Poly.symbol("F")
    z = Poly.symbol("z")
    inputs = {"n": n, "b": b, "k_r": kr}
    for m in range(0, n + 1):
        closed = poly_sum(falling(n, m) * c**m * kr.get(r, F(0)) * z ** (m - r) / _fact(m - r)
                          for r in range(m + 1))
        if m == n:
            closed = closed - Poly.symbol("F")
        table.compare("a", n - m, closed, inputs=inputs)
    return table


# ---------------------------------------------------------------------------
# KD logarithmic family, polynomial in the travelling coordinate


def kd_travel_coeffs(n: int, a, b, b_j: Mapping[int, Fraction] | None = None) -> CoeffTable:
    """``a_m`` as polynomials in ``eta = y + 12 b t / a`` and ``t``.

    Defaults: ``b_n = 1``, other ``b_j = 0``.
    """
    a, b = F(a), F(b)
    if a == 0:
        raise InvalidConstantError("a must be nonzero")
    if n < 1:
        raise ValueError("n must be >= 1")
    bj = {n: F(1)}
    bj.update({i: F(v) for i, v in (b_j or {}).items()})
    table = CoeffTable("KD-LX", (0, n), {})
    A = table.coeffs
    zero = Poly()
    A[n] = Poly.const(bj.get(n, F(0)))
    A[n - 1] = Poly.const(bj.get(n - 1, F(0)))
    for m in range(n - 2, -1, -1):
        G = (-(m + 2) * (m + 1) * A[m + 2]).integrate("eta")
        rt = 4 * (m + 3) * (m + 2) * (m + 1) * A.get(m + 3, zero)
        cprime = (rt - G.diff("t")).subs({"eta": 0})
        A[m] = G + cprime.integrate("t") + bj.get(m, F(0))
        if not (A[m].diff("t") - rt).is_zero():
            raise RecurrenceError(f"incompatible recurrence at m={m}")
    inputs = {"n": n, "a": a, "b": b, "b_j": bj}
    for k in range(0, n + 1):
        table.compare("a", n - k, travel_closed_derived(n, k, bj), form="derived", inputs=inputs)
        for reading in ("literal", "remainder"):
            closed, note = travel_closed_printed(n, k, bj, reading)
            table.compare("a", n - k, closed, form=f"printed/{reading}", inputs=inputs, note=note)
    return table


def travel_closed_derived(n: int, k: int, bj: Mapping[int, Fraction]) -> Poly:
    """Closed form of ``a_{n-k}`` solving the shifted recurrences directly."""
    eta, t = Poly.symbol("eta"), Poly.symbol("t")
    out = Poly()
    for p in range(k // 3 + 1):
        for q in range((k - 3 * p) // 2 + 1):
            j = k - 2 * q - 3 * p
            coef = F((-1) ** q, _fact(q)) * F(4**p, _fact(p)) * _prod(F(n - l) for l in range(j, k))
            out = out + coef * bj.get(n - j, F(0)) * eta**q * t**p
    return out


def _d(m: int, k: int) -> int:
    return k // m


def _r(m: int, k: int, reading: str) -> int:
    return k - k // m if reading == "literal" else k - m * (k // m)


def travel_closed_printed(n: int, k: int, bj: Mapping[int, Fraction], reading: str):
    """Printed closed form of ``a_{n-k}``; the self-referential product bound is read as k-1.

    Returns ``(poly or None, note)``; ``None`` when a term is ill-formed
    (negative exponent, factorial or coefficient index).
    """
    eta, t = Poly.symbol("eta"), Poly.symbol("t")

    def b_of(i):
        if i < 0:
            raise ValueError("negative coefficient index")
        return bj.get(i, F(0)) if i <= n else F(0)

    def pw(sym: Poly, e: int) -> Poly:
        if e < 0:
            raise ValueError("negative exponent")
        return sym**e

    try:
        out = Poly()
        d3 = _d(3, k)
        for p in range(0, d3):
            R = 3 * p + _r(3, k, reading)
            d2 = _d(2, R)
            r2 = _r(2, R, reading)
            for q in range(0, d2 + 1):
                coef = (F((-1) ** (d2 - q) * 4 ** (d3 - p), _fact(d3 - p) * _fact(d2 - q))
                        * _prod(F(n - l) for l in range(R, k))
                        * _prod(F(n - s) for s in range(2 * q + r2, R)))
                out = out + coef * b_of(n - 2 * q - r2) * pw(eta, d2 - p) * pw(t, d3 - p)
        d2k, r2k = _d(2, k), _r(2, k, reading)
        for q in range(0, d2k + 1):
            coef = F((-1) ** (d2k - q), _fact(d2k - q)) * _prod(F(n - l) for l in range(2 * q - r2k, k))
            out = out + coef * b_of(n - 2 * q - r2k) * pw(eta, d2k - q)
        return out, "upper product bound read as k-1"
    except ValueError as e:
        return None, f"ill-formed under this reading: {e}"


# ---------------------------------------------------------------------------
# KD logarithmic family, polynomial in y


def e_table(m_max: int) -> dict[tuple[int, int], Fraction]:
    """``e_{m,k}`` from the three-term recurrence, 0 <= m <= m_max, 0 <= k <= m."""
    e: dict[tuple[int, int], Fraction] = {}

    def get(m, k):
        if m < 0 or k < 0:
            return F(0)
        return e.get((m, k), F(0))

    for m in range(0, m_max + 1):
        for k in range(0, m + 1):
            if m == 0:
                e[(m, k)] = F(1) if k == 0 else F(0)
            else:
                e[(m, k)] = get(m - 1, k) + get(m - 2, k - 1) + get(m - 3, k - 2) / 3
    return e


def e_closed(m: int, k: int) -> Fraction:
    return sum((F(1, 3**s) * binom(k - s, s) * binom(m - k, k - s) for s in range(k + 1)), F(0))


def e_check(m_max: int = 10) -> CoeffTable:
    table = CoeffTable("KD-LY", (0, m_max), {})
    rec = e_table(m_max)
    for m in range(m_max + 1):
        for k in range(0, (2 * m) // 3 + 1):
            table.coeffs[(m, k)] = rec[(m, k)]
            table.compare_values("e", (m, k), rec[(m, k)], e_closed(m, k), form="printed",
                                 inputs={"m": m, "k": k})
    return table


def d_sequence(m_max: int, a, b) -> list[Poly]:
    a, b = F(a), F(b)
    c1, c2, c3 = 12 * b * b / (a * a), 12 * b / a, F(4)
    d: list[Poly] = [Poly.const(1)]
    for m in range(1, m_max + 1):
        rhs = c1 * d[m - 1]
        if m >= 2:
            rhs = rhs + c2 * d[m - 2]
        if m >= 3:
            rhs = rhs + c3 * d[m - 3]
        d.append(rhs.integrate("t"))
    return d


def d_closed(m: int, a, b) -> Poly:
    a, b = F(a), F(b)
    t = Poly.symbol("t")
    out = Poly()
    for k in range((2 * m) // 3 + 1):
        coef = sum((F(1, 3**s) * binom(k - s, s) * binom(m - k, k - s) for s in range(k + 1)), F(0))
        out = out + coef * 12 ** (m - k) * (b / a) ** (2 * m - 3 * k) / _fact(m - k) * t ** (m - k)
    return out


def kd_ypoly_coeffs(n: int, a, b, c_p: Mapping[int, Fraction] | None = None) -> CoeffTable:
    """Tables for f = sum_m g_m(x, t) y^m exp(2b x / a + 8 b^3 t / a^3).

    ``coeffs[(j, r)]`` is ``B^j_r(t)``, the coefficient of x^r in ``g_j``;
    ``extras['g']`` holds the ``g_j`` as polynomials in x and t.  Defaults:
    ``c_n = 1``, other ``c_p = 0``.
    """
    a, b = F(a), F(b)
    if a == 0:
        raise InvalidConstantError("a must be nonzero")
    if n < 0:
        raise ValueError("n must be >= 0")
    cp = {n: F(1)}
    cp.update({i: F(v) for i, v in (c_p or {}).items()})
    beta = 2 * b / a
    table = CoeffTable("KD-LY", (0, n), {})
    B0: dict[int, Poly] = {}
    zero = Poly()
    for s in range(n, -1, -1):
        rhs = (12 * b * b / (a * a) * (s + 1) * B0.get(s + 1, zero)
               + 12 * b / a * (s + 2) * (s + 1) * B0.get(s + 2, zero)
               + 4 * (s + 3) * (s + 2) * (s + 1) * B0.get(s + 3, zero))
        B0[s] = rhs.integrate("t") + falling(n, n - s) * cp.get(s, F(0))
    x = Poly.symbol("x")
    g = [poly_sum(B0[s] * x**s for s in range(n + 1))]
    for j in range(1, n + 1):
        prev = g[-1]
        g.append(-(prev.diff("x", 2) + beta * prev.diff("x")) / j)
    for j, gj in enumerate(g):
        for r in range(n - j + 1):
            table.coeffs[(j, r)] = gj.coeff("x", r)
    table.extras["g"] = g
    table.extras["B0"] = B0
    inputs = {"n": n, "a": a, "b": b, "c_p": cp}

    d = d_sequence(n, a, b)
    for m in range(n + 1):
        table.compare_values("d", m, d[m], d_closed(m, a, b), inputs=inputs)
        via_d = falling(n, m) * poly_sum(cp.get(n - p, F(0)) * d[m - p] for p in range(m + 1))
        table.compare_values("B0_via_d", n - m, B0[n - m], via_d, form="derived", inputs=inputs)
        table.compare_values("B0", n - m, B0[n - m], _b0_printed(n, m, a, b, cp), inputs=inputs)
    for j in range(1, n + 1):
        for r in range(n - j + 1):
            rec = table.coeffs[(j, r)]
            table.compare_values("B", (j, r), rec, _bm_derived(j, r, beta, B0, n), form="derived", inputs=inputs)
            table.compare_values("B", (j, r), rec, _bm_printed(j, r, beta, B0, n), inputs=inputs)
    return table


def _b0_printed(n: int, m: int, a: Fraction, b: Fraction, cp: Mapping[int, Fraction]) -> Poly:
    t = Poly.symbol("t")
    out = Poly()
    for p in range(m + 1):
        for k in range((2 * m - p) // 3 + 1):
            for s in range(k + 1):
                e = m - p - k
                if e < 0 or 2 * m - 2 * p - 3 * k < 0:
                    continue
                coef = (cp.get(n - p, F(0)) * 12**e * F(1, 3**s) * binom(k - s, s) * binom(e, k - s)
                        * (b / a) ** (2 * m - 2 * p - 3 * k) / _fact(e))
                out = out + coef * t**e
    return falling(n, m) * out


def _bm_derived(m: int, r: int, beta: Fraction, B0: Mapping[int, Poly], n: int) -> Poly:
    out = Poly()
    for s in range(m + 1):
        idx = r + m + s
        if idx > n:
            continue
        out = out + (F((-1) ** m, _fact(m)) * binom(m, s) * beta ** (m - s)
                     * _prod(F(r + l) for l in range(1, m + s + 1))) * B0[idx]
    return out


def _bm_printed(m: int, r: int, beta: Fraction, B0: Mapping[int, Poly], n: int) -> Poly:
    out = Poly()
    for s in range(0, 2**m + 1):
        idx = r + m + s
        if idx > n:
            continue
        out = out + (_prod(F(r + l) for l in range(0, m + s + 1)) * F(binom(m, s), _fact(m))
                     * beta**s) * B0[idx]
    return out


# ---------------------------------------------------------------------------
# KD quadratic-in-x families: the constant-in-x coefficient C


LogLaurent = dict  # {(power, log power): Expr coefficient}


def _ll_add(d: LogLaurent, key, c: ex.Expr):
    v = ex.add(d.get(key, ex.ZERO), c)
    if v == ex.ZERO:
        d.pop(key, None)
    else:
        d[key] = v


def integrate_loglaurent(terms: LogLaurent) -> LogLaurent:
    """Antiderivative in P of sum c * P^j * log(P)^m (by parts; constants dropped)."""
    out: LogLaurent = {}

    def one(j: int, m: int, c: ex.Expr):
        if j == -1:
            _ll_add(out, (0, m + 1), ex.mul(c, F(1, m + 1)))
            return
        _ll_add(out, (j + 1, m), ex.mul(c, F(1, j + 1)))
        if m > 0:
            one(j, m - 1, ex.mul(c, F(-m, j + 1)))

    for (j, m), c in terms.items():
        one(j, m, c)
    return out


def loglaurent_expr(terms: LogLaurent, P: ex.Expr) -> ex.Expr:
    parts = []
    for (j, m), c in sorted(terms.items()):
        parts.append(ex.mul(c, ex.power(P, j), ex.power(ex.log(P), m)))
    return ex.add(*parts)


@dataclass
class QuadraticKD:
    kind: str
    s: Fraction  # P = s*y + psi
    kappa: int
    A: ex.Expr
    B_terms: dict
    C_terms: LogLaurent
    P: ex.Expr
    f0: ex.Expr

    def B(self) -> ex.Expr:
        return ex.add(*[ex.mul(c, ex.power(self.P, j)) for j, c in sorted(self.B_terms.items())])

    def C(self, sigma: ex.Expr) -> ex.Expr:
        return ex.add(loglaurent_expr(self.C_terms, self.P), sigma)


def kd_quadratic_coeffs(kind: str, a, b, *, psi: ex.Expr, fm1: ex.Expr, fk: ex.Expr, phi: ex.Expr,
                        dt: Callable[[ex.Expr], ex.Expr]) -> QuadraticKD:
    """Solve for C in the quadratic-in-x KD ansatz.

    ``kind`` is ``'Q1'`` (P = a y + psi, B has a P^4 term ``fk``) or ``'Q2'``
    (P = -2 a y + psi, B has a P^1 term ``fk``).  With D = C_y the
    constant-in-x equation is the first-order linear ODE
    D_P + kappa D / P = S / (3 s), solved with the integrating factor P^kappa;
    ``phi`` is the homogeneous constant.  ``dt`` differentiates a
    t-only coefficient.
    """
    a, b = F(a), F(b)
    if a == 0:
        raise InvalidConstantError("a must be nonzero")
    if kind == "Q1":
        s, top = a, 4
    elif kind == "Q2":
        s, top = -2 * a, 1
    else:
        raise ValueError(kind)
    kappa = int(-2 * a / s)
    P = ex.add(ex.mul(s, ex.Y), psi)
    psi_t = dt(psi)
    f0 = ex.mul(F(1) / (6 * a * a), ex.add(psi_t, 12 * b))
    Bt = {-1: fm1, 0: f0, top: fk}
    # S = B_t - 12 b B / P + 3 a^2 B^2 / P
    S: dict[int, ex.Expr] = {}

    def acc(j, c):
        v = ex.add(S.get(j, ex.ZERO), c)
        if v == ex.ZERO:
            S.pop(j, None)
        else:
            S[j] = v

    for j, c in Bt.items():
        acc(j, dt(c))
        if j:
            acc(j - 1, ex.mul(j, c, psi_t))
        acc(j - 1, ex.mul(-12 * b, c))
    for j1, c1 in Bt.items():
        for j2, c2 in Bt.items():
            acc(j1 + j2 - 1, ex.mul(3 * a * a, c1, c2))
    integrand = {(j + kappa, 0): ex.mul(c, F(1) / (3 * s)) for j, c in S.items()}
    E = integrate_loglaurent(integrand)
    _ll_add(E, (0, 0), phi)
    D = {(j - kappa, m): c for (j, m), c in E.items()}
    C = {k: ex.mul(c, F(1) / s) for k, c in integrate_loglaurent(D).items()}
    return QuadraticKD(kind, s, kappa, ex.power(P, -1), Bt, C, P, f0)


def kd_quadratic_printed_C(kind: str, a, b, *, psi, fm1, fk, phi, dt) -> LogLaurent:
    """The printed C coefficients in the same (power, log power) basis."""
    a, b = F(a), F(b)
    psi_t = dt(psi)
    f0 = ex.mul(F(1) / (6 * a * a), ex.add(psi_t, 12 * b))
    M = ex.mul
    A_ = ex.add
    if kind == "Q1":
        f4 = fk
        return _clean({
            (-1, 0): M(F(1, 4), fm1, fm1),
            (0, 1): M(F(-1) / (3 * a * a), A_(M(F(-1, 3), fm1, f4), M(-4 * b, fm1), M(2 * a * a, fm1, f0))),
            (1, 0): M(F(-1) / (2 * a * a), A_(M(F(1, 3), dt(fm1)), M(-4 * b, f0), M(a * a, f0, f0))),
            (3, 0): M(F(1) / (3 * a), phi),
            (4, 0): M(F(1, 2), fm1, f4),
            (5, 0): M(F(1) / (10 * a * a), A_(M(F(4, 3), f4, psi_t), M(-4 * b, f4), M(2 * a * a, f0, f4))),
            (6, 0): M(F(1) / (54 * a * a), dt(f4)),
            (9, 0): M(F(1, 54), f4, f4),
        })
    f1 = fk
    return _clean({
        (-1, 0): M(F(1, 4), fm1, fm1),
        (0, 1): M(F(-1) / (2 * a), phi),
        (0, 2): M(F(1) / (8 * a * a), A_(M(F(-1, 3), fm1, psi_t), M(-4 * b, fm1), M(2 * a * a, f0, fm1))),
        (1, 0): M(F(1) / (4 * a * a), A_(M(F(1, 3), dt(fm1)), M(-4 * b, f0), M(a * a, A_(M(2, fm1, f1), M(f0, f0))))),
        (2, 0): M(F(1) / (16 * a * a), A_(M(F(1, 3), A_(dt(f0), M(f1, psi_t))), M(-4 * b, f1), M(2 * a * a, f0, f1))),
        (3, 0): M(F(1) / (36 * a * a), A_(M(F(1, 3), dt(f1)), M(a * a, f1, f1))),
    })


def _clean(d: LogLaurent) -> LogLaurent:
    return {k: v for k, v in d.items() if v != ex.ZERO}


def _normal(e: ex.Expr) -> Poly:
    return Poly.from_expr(e, opaque_calls=True)


def kd_quadratic_table(kind: str, a, b) -> CoeffTable:
    """Derived vs printed C coefficients with symbolic parameter functions of t."""
    T = ex.T
    names = {"psi": "psi", "fm1": "fm1", "fk": "f4" if kind == "Q1" else "f1", "phi": "phi"}
    calls = {k: ex.call(v, T) for k, v in names.items()}

    def dt(e):
        return ex.differentiate(e, "t")

    sol = kd_quadratic_coeffs(kind, a, b, dt=dt, **calls)
    printed = kd_quadratic_printed_C(kind, a, b, dt=dt, **calls)
    table = CoeffTable(f"KD-{kind}", (min(k[0] for k in sol.C_terms), max(k[0] for k in sol.C_terms)),
                       {k: _normal(v) for k, v in sol.C_terms.items()})
    inputs = {"a": F(a), "b": F(b)}
    for key in sorted(set(sol.C_terms) | set(printed)):
        rec = table.coeffs.get(key, Poly())
        closed = _normal(printed[key]) if key in printed else Poly()
        table.compare_values("C", key, rec, closed, inputs=inputs,
                             note="index = [power of P, power of log P]")
    return table


def standard_tables(n_max: int = 5, a=F(2), b=F(1, 3), k=F(1, 2), seed: int = 0) -> list[CoeffTable]:
    """Every recurrence-versus-closed-form comparison at degrees up to ``n_max``.

    Indexed constants are seeded random rationals, so the result (and its
    report) is a pure function of the arguments.
    """
    import numpy as np

    rng = np.random.default_rng(seed)

    def rats(lo: int, hi: int) -> dict[int, Fraction]:
        return {i: F(int(rng.integers(-9, 10)), int(rng.integers(1, 6))) for i in range(lo, hi + 1)}

    a, b, k = F(a), F(b), F(k)
    tables = [e_check(10), flag_table(8, a, b)]
    for n in range(0, n_max + 1):
        tables.append(jm_laurent_coeffs(n))
        if n >= 3:
            tables.append(jm_xpoly_coeffs(n))
        if n >= 1:
            tables.append(jm_log_poly_coeffs(n, k, rats(0, n - 1)))
            tables.append(kd_travel_coeffs(n, a, b, rats(0, n)))
        if n >= 2:
            tables.append(jm_ypoly_g_coeffs(n, b, rats(0, n)))
        tables.append(kd_ypoly_coeffs(n, a, b, rats(0, n)))
    tables.append(kd_quadratic_table("Q1", a, b))
    tables.append(kd_quadratic_table("Q2", a, b))
    return tables
