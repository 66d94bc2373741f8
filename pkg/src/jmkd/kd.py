"""Solution families of the KD system, built as a potential W with u = W_x, v = W_y."""

from __future__ import annotations

from fractions import Fraction

from . import coeffs
from . import expr as ex
from .families import BuiltField, FamilySpec, Guard
from .poly import Poly

F = Fraction
T, X, Y, Z = ex.T, ex.X, ex.Y, ex.Z
add, mul, power, call = ex.add, ex.mul, ex.power, ex.call


def kd_sign_reflect(W: ex.Expr) -> ex.Expr:
    """The other sign branch: -W(-x, -y, -t) (the potential equation is invariant)."""
    return ex.neg(ex.substitute(W, {"x": ex.neg(X), "y": ex.neg(Y), "t": ex.neg(T)}))


def normalize_calls(e: ex.Expr) -> ex.Expr:
    """Collect like terms of an expression polynomial in parameter calls."""
    calls = {str(n): n for n in ex.walk(e) if isinstance(n, ex.Call)}
    try:
        p = Poly.from_expr(e, opaque_calls=True)
    except Exception:
        return e
    return p.to_expr(calls)


def _finish(spec: FamilySpec, W: ex.Expr, guards: list[Guard]) -> BuiltField:
    return BuiltField(spec, W, guards, u=ex.differentiate(W, "x"), v=ex.differentiate(W, "y"))


def _quadratic(spec: FamilySpec) -> BuiltField:
    kind = spec.family[-2:]
    a, b = spec.constant("a"), spec.constant("b")
    fk = "f4" if kind == "Q1" else "f1"
    sol = coeffs.kd_quadratic_coeffs(kind, a, b, psi=call("psi", T), fm1=call("fm1", T), fk=call(fk, T),
                                     phi=call("phi", T), dt=lambda e: ex.differentiate(e, "t"))
    C_terms = {k: normalize_calls(c) for k, c in sol.C_terms.items()}
    C = add(coeffs.loglaurent_expr({k: c for k, c in C_terms.items() if c != ex.ZERO}, sol.P), call("sigma", T))
    B = add(*[mul(normalize_calls(c), power(sol.P, j)) for j, c in sorted(sol.B_terms.items())])
    W = add(mul(sol.A, power(X, 2)), mul(B, X), C)
    return _finish(spec, W, [Guard(sol.P, "positive", "P")])


def _lx(spec: FamilySpec) -> BuiltField:
    n, a, b = spec.n, spec.constant("a"), spec.constant("b")
    table = coeffs.kd_travel_coeffs(n, a, b, spec.indexed)
    xi = add(X, mul(2 * b / a, Y), mul(12 * b * b / (a * a), T))
    eta = add(Y, mul(12 * b / a, T))
    f = add(*[mul(table.coeffs[m].to_expr({"eta": eta}), power(xi, m)) for m in range(n + 1)])
    W = mul(2 / a, ex.log(f))
    guard = Guard(f, "positive", "f")
    if spec.sign < 0:
        W = kd_sign_reflect(W)
        guard = Guard(ex.substitute(f, {"x": ex.neg(X), "y": ex.neg(Y), "t": ex.neg(T)}), "positive", "f")
    return _finish(spec, W, [guard])


def _ly(spec: FamilySpec) -> BuiltField:
    n, a, b = spec.n, spec.constant("a"), spec.constant("b")
    table = coeffs.kd_ypoly_coeffs(n, a, b, spec.indexed)
    g = add(*[mul(gj.to_expr(), power(Y, j)) for j, gj in enumerate(table.extras["g"])])
    # log of the exponential factor is written out so that large x or t cannot overflow
    W = mul(2 / a, add(ex.log(g), mul(2 * b / a, X), mul(8 * b**3 / a**3, T)))
    guard = Guard(g, "positive", "g")
    if spec.sign < 0:
        W = kd_sign_reflect(W)
        guard = Guard(ex.substitute(g, {"x": ex.neg(X), "y": ex.neg(Y), "t": ex.neg(T)}), "positive", "g")
    return _finish(spec, W, [guard])


BUILDERS = {"KD-Q1": _quadratic, "KD-Q2": _quadratic, "KD-LX": _lx, "KD-LY": _ly}


def build_kd(spec: FamilySpec) -> BuiltField:
    """Assemble (W, u, v) for a validated KD family spec."""
    try:
        builder = BUILDERS[spec.family]
    except KeyError:
        raise ValueError(f"{spec.family} is not a KD family") from None
    return builder(spec)
