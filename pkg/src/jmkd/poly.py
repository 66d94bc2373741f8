"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a sorted tuple of ``(symbol, exponent)`` pairs; the empty tuple
is the constant monomial.  Symbols are plain strings, so the same class
serves for polynomials in the coordinates (``x``, ``t`` ...) and for
polynomials whose indeterminates stand for parameter functions (``beta``,
``gamma_0`` ...) that are mapped back to expressions with :meth:`to_expr`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from . import expr as ex

Monomial = tuple  # tuple[tuple[str, int], ...]


class NotPolynomialError(ValueError):
    pass


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for s, k in b:
        d[s] = d.get(s, 0) + k
    return tuple(sorted(d.items()))


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[m] = c

    # construction ---------------------------------------------------------
    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): Fraction(c)})

    @classmethod
    def symbol(cls, name: str, power: int = 1) -> "Poly":
        return cls({((name, power),): Fraction(1)}) if power else cls.const(1)

    @classmethod
    def coerce(cls, v) -> "Poly":
        if isinstance(v, Poly):
            return v
        if isinstance(v, str):
            return cls.symbol(v)
        return cls.const(v)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other) -> "Poly":
        other = Poly.coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-Poly.coerce(other))

    def __rsub__(self, other) -> "Poly":
        return Poly.coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = Poly.coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Poly":
        c = Fraction(c)
        return Poly({m: v / c for m, v in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out, base = Poly.const(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            try:
                other = Poly.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return f"Poly({self.to_expr()})"

    # calculus ---------------------------------------------------------------
    def diff(self, s: str, k: int = 1) -> "Poly":
        p = self
        for _ in range(k):
            out: dict[Monomial, Fraction] = {}
            for m, c in p.terms.items():
                d = dict(m)
                e = d.get(s, 0)
                if e == 0:
                    continue
                if e == 1:
                    del d[s]
                else:
                    d[s] = e - 1
                mm = tuple(sorted(d.items()))
                out[mm] = out.get(mm, Fraction(0)) + c * e
            p = Poly(out)
        return p

    def integrate(self, s: str) -> "Poly":
        """Antiderivative in ``s`` vanishing at ``s = 0``."""
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.get(s, 0) + 1
            d[s] = e
            out[tuple(sorted(d.items()))] = c / e
        return Poly(out)

    # queries ----------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def symbols(self) -> set[str]:
        return {s for m in self.terms for s, _ in m}

    def degree(self, s: str) -> int:
        return max((dict(m).get(s, 0) for m in self.terms), default=-1 if not self.terms else 0)

    def coeff(self, s: str, k: int) -> "Poly":
        """Coefficient of ``s**k`` as a polynomial in the remaining symbols."""
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            if d.get(s, 0) == k:
                d.pop(s, None)
                out[tuple(sorted(d.items()))] = c
        return Poly(out)

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def subs(self, values: Mapping[str, "Poly | Fraction | int"]) -> "Poly":
        vals = {k: Poly.coerce(v) for k, v in values.items()}
        out = Poly()
        for m, c in self.terms.items():
            term = Poly.const(c)
            rest = []
            for s, e in m:
                if s in vals:
                    term = term * vals[s] ** e
                else:
                    rest.append((s, e))
            out = out + term * Poly({tuple(rest): 1})
        return out

    def eval(self, values: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c
            for s, e in m:
                v *= Fraction(values[s]) ** e
            total += v
        return total

    def to_expr(self, mapping: Mapping[str, ex.Expr] | None = None) -> ex.Expr:
        """Expression tree; ``mapping`` replaces symbols (default: coordinate vars)."""
        mapping = mapping or {}
        terms = []
        for m, c in self.terms.items():
            fs: list[ex.Expr] = [ex.const(c)]
            for s, e in m:
                fs.append(ex.power(mapping.get(s, ex.Var(s)), e))
            terms.append(ex.mul(*fs))
        return ex.add(*terms)

    @classmethod
    def from_expr(cls, e: ex.Expr, constants: Mapping[str, Fraction] | None = None,
                  opaque_calls: bool = False) -> "Poly":
        """Convert a polynomial expression; named constants become symbols unless valued.

        With ``opaque_calls`` every parameter call is treated as an
        indeterminate named by its display text, which gives a normal form
        for expressions that are polynomial in the parameter functions.
        """
        constants = constants or {}
        memo: dict[ex.Expr, Poly] = {}

        def go(n: ex.Expr) -> Poly:
            r = memo.get(n)
            if r is not None:
                return r
            if isinstance(n, ex.Const):
                r = cls.const(n.value)
            elif isinstance(n, ex.Var):
                r = cls.symbol(n.name)
            elif isinstance(n, ex.NamedConst):
                r = cls.const(constants[n.name]) if n.name in constants else cls.symbol(n.name)
            elif isinstance(n, ex.Add):
                r = cls()
                for t in n.terms:
                    r = r + go(t)
            elif isinstance(n, ex.Mul):
                r = cls.const(1)
                for f in n.factors:
                    r = r * go(f)
            elif isinstance(n, ex.Pow) and n.exp > 0:
                r = go(n.base) ** n.exp
            elif opaque_calls and isinstance(n, ex.Call):
                r = cls.symbol(str(n))
            else:
                raise NotPolynomialError(f"{type(n).__name__} node is not polynomial")
            memo[n] = r
            return r

        return go(e)


def poly_sum(ps: Iterable[Poly]) -> Poly:
    out = Poly()
    for p in ps:
        out = out + p
    return out


X, T, Y, Z = (Poly.symbol(s) for s in "xtyz")


class RationalFunction:
    """Quotient ``num / den`` of polynomials, used for exact identity checks."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        self.num = num
        self.den = den if den is not None else Poly.const(1)
        if self.den.is_zero():
            raise ZeroDivisionError("zero denominator")

    @classmethod
    def from_expr(cls, e: ex.Expr, constants: Mapping[str, Fraction] | None = None) -> "RationalFunction":
        constants = constants or {}
        memo: dict[ex.Expr, RationalFunction] = {}

        def go(n: ex.Expr) -> RationalFunction:
            r = memo.get(n)
            if r is not None:
                return r
            if isinstance(n, ex.Add):
                r = go(n.terms[0])
                for t in n.terms[1:]:
                    r = r + go(t)
            elif isinstance(n, ex.Mul):
                r = go(n.factors[0])
                for f in n.factors[1:]:
                    r = r * go(f)
            elif isinstance(n, ex.Pow):
                b = go(n.base)
                r = b.pow(n.exp)
            else:
                r = cls(Poly.from_expr(n, constants))
            memo[n] = r
            return r

        return go(e)

    def __add__(self, o: "RationalFunction") -> "RationalFunction":
        if self.den == o.den:
            return RationalFunction(self.num + o.num, self.den)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    def __mul__(self, o: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * o.num, self.den * o.den)

    def pow(self, k: int) -> "RationalFunction":
        if k >= 0:
            return RationalFunction(self.num**k, self.den**k)
        if self.num.is_zero():
            raise ZeroDivisionError("pole")
        return RationalFunction(self.den ** (-k), self.num ** (-k))

    def is_zero(self) -> bool:
        return self.num.is_zero()
