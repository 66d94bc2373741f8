"""Solution families of the Jimbo-Miwa equation as expression trees.

Every builder reads a validated :class:`~jmkd.families.FamilySpec` and
returns a :class:`~jmkd.families.BuiltField` whose ``W`` contains unbound
``Call`` nodes for the parameter functions; the FamilySpec bindings supply the
bodies at evaluation time.
"""

from __future__ import annotations

from fractions import Fraction

from . import coeffs
from . import expr as ex
from .families import BuiltField, FamilySpec, Guard

F = Fraction
T, X, Y, Z = ex.T, ex.X, ex.Y, ex.Z
add, mul, power, call, antideriv = ex.add, ex.mul, ex.power, ex.call, ex.antideriv


def dt(e: ex.Expr) -> ex.Expr:
    return ex.differentiate(e, "t")


def dz(e: ex.Expr) -> ex.Expr:
    return ex.differentiate(e, "z")


def dy(e: ex.Expr) -> ex.Expr:
    return ex.differentiate(e, "y")


def burgers_kernel(c: ex.Expr, d: ex.Expr) -> ex.Expr:
    """A = -(x - c) / (z - d), which solves A_x^2 + A A_xx - A_xz = 0 (A_z = A A_x)."""
    return mul(-1, add(X, -c), power(add(Z, -d), -1))


def burgers_residual(A: ex.Expr) -> ex.Expr:
    Ax = ex.diff(A, "x")
    return add(mul(Ax, Ax), mul(A, ex.diff(A, "x", "x")), mul(-1, ex.diff(A, "x", "z")))


def _p2a(spec: FamilySpec) -> BuiltField:
    alpha = call("alpha", T, Z)
    a_t = dt(alpha)
    e6 = ex.exp(mul(6, alpha))
    e3 = ex.exp(mul(3, alpha))
    A1 = add(mul(ex.exp(mul(-6, alpha)),
                 add(call("gamma", Y, Z), mul(3, Y, antideriv(mul(dz(a_t), e6), "t")))),
             call("rho", Z, T))
    G = add(dz(A1), mul(-1, A1, dy(A1)))
    inner = antideriv(antideriv(mul(G, e3), "t"), "y")
    A0 = add(mul(ex.exp(mul(-3, alpha)), add(call("eta", Y, Z), mul(F(3, 2), inner))), call("zeta", Z, T))
    W = add(mul(a_t, power(X, 2)), mul(A1, X), A0)
    return BuiltField(spec, W, [])


def _p2b(spec: FamilySpec) -> BuiltField:
    n = spec.n
    beta = call("beta", Y, Z)
    P = add(mul(F(9, 2), T), beta)
    table = coeffs.jm_laurent_coeffs(n, tail=0)
    mapping = {"beta": beta, coeffs.BETA_INT: antideriv(dz(beta), "y")}
    for j in range(-1, n + 1):
        mapping[f"gamma[{j}]"] = spec.gamma(j, Z)
    A1 = add(*[mul(table.coeffs[m].to_expr(mapping), power(P, m)) for m in range(-1, n + 1)])
    G = add(dz(A1), mul(-1, A1, dy(A1)))
    P23 = power(P, F(2, 3))
    Pm23 = power(P, F(-2, 3))
    A0 = add(antideriv(mul(Pm23, call("eta", Y, Z)), "y"),
             antideriv(mul(F(3, 2), Pm23, antideriv(mul(P23, G), "t")), "y"),
             call("zeta", Z, T))
    W = add(mul(power(P, -1), power(X, 2)), mul(A1, X), A0)
    return BuiltField(spec, W, [Guard(P, "positive", "9t/2 + beta(y,z)")])


def _pn(spec: FamilySpec) -> BuiltField:
    n = spec.n
    g = call("g", T)
    phi = call("phi", Z, T)
    gz = add(g, mul(-1, Z))
    inv = power(gz, -1)
    table = coeffs.jm_xpoly_coeffs(n)
    mapping = {"I": antideriv(mul(phi, inv), "z"), "gtz": mul(dt(g), Z)}
    for j in range(2, n + 1):
        mapping[f"gamma[{j}]"] = spec.gamma(j, T)
    A = {j: mul(table.coeffs[j].to_expr(mapping), power(gz, -j)) for j in range(2, n + 1)}
    eta = mul(inv, add(mul(2, antideriv(mul(add(mul(phi, A[2]), mul(F(1, 3), dt(phi))), gz), "z")),
                       call("h", T)))
    W = add(*[mul(A[j], power(X, j)) for j in range(2, n + 1)],
            mul(add(mul(Y, inv), eta), X), mul(Y, phi), call("f", Z, T))
    return BuiltField(spec, W, [Guard(gz, "nonzero", "g(t) - z")])


def _y1(spec: FamilySpec) -> BuiltField:
    c, d = call("c", T), call("d", T)
    A = burgers_kernel(c, d)
    xc = add(X, mul(-1, c))
    W = add(mul(A, Y), mul(ex.exp(mul(-1, A)), call("phi", T)),
            mul(F(-1, 3), dt(d), power(xc, 2), power(add(Z, mul(-1, d)), -1)),
            mul(F(2, 3), dt(c), X), call("f", T, Z))
    return BuiltField(spec, W, [Guard(add(Z, mul(-1, d)), "nonzero", "z - d(t)")])


def sqrt_family(n: int, phi: ex.Expr, h: ex.Expr, g: ex.Expr, f: ex.Expr, eta: ex.Expr) -> tuple[ex.Expr, ex.Expr]:
    """W and the radicand xi = phi x + phi h + g of the square-root families."""
    xi = add(mul(phi, X), mul(phi, h), g)
    inner = add(mul(F(2, 3), dt(phi), power(phi, -3), power(xi, 2)),
                mul(4, dt(mul(g, power(phi, -1))), xi, power(phi, -1)),
                mul(-3, f, power(phi, -1), power(xi, F(1, 2))),
                mul(F(1, 2), phi, power(xi, -1)))
    W = add(mul(power(xi, F(1, 2)), power(Y, n)), mul(dz(h), Y), mul(F(-1, 6), inner), eta)
    return W, xi


def _y2(spec: FamilySpec) -> BuiltField:
    W, xi = sqrt_family(2, call("b", T), call("h", Z), call("eta", T), call("g", T), call("l", Z, T))
    return BuiltField(spec, W, [Guard(xi, "positive", "b x + b h + eta")])


def _yn(spec: FamilySpec) -> BuiltField:
    W, xi = sqrt_family(spec.n, call("phi", T), call("h", Z), call("g", T), call("f", T), call("eta", Z, T))
    return BuiltField(spec, W, [Guard(xi, "positive", "phi x + phi h + g")])


def log_field(f: ex.Expr) -> ex.Expr:
    """W = 2 f_x / f."""
    return mul(2, ex.differentiate(f, "x"), power(f, -1))


def _l1(spec: FamilySpec) -> BuiltField:
    n, k = spec.n, spec.constant("k")
    table = coeffs.jm_log_poly_coeffs(n, k, spec.indexed)
    f = add(*[mul(table.coeffs[m].to_expr(), power(X, m)) for m in range(n + 1)],
            call("eta", add(Y, mul(k, Z))))
    return BuiltField(spec, log_field(f), [Guard(f, "nonzero", "f")])


def _l2(spec: FamilySpec) -> BuiltField:
    C, k = spec.constant("C"), spec.constant("k")
    f = add(X, mul(C, Y), k, call("rho", add(T, mul(F(2, 3) * C, Z))))
    return BuiltField(spec, log_field(f), [Guard(f, "nonzero", "f")])


def _l3(spec: FamilySpec) -> BuiltField:
    n, b = spec.n, spec.constant("b")
    table = coeffs.jm_ypoly_g_coeffs(n, b, {0: F(1), **spec.indexed})
    Fz = call("F", Z)
    g = add(*[mul(table.coeffs[m].to_expr({"F": Fz}), power(Y, m)) for m in range(n + 1)])
    f = add(X, g, mul(b, T), Fz)
    return BuiltField(spec, log_field(f), [Guard(f, "nonzero", "f")])


def _l4(spec: FamilySpec) -> BuiltField:
    a, b = spec.constant("a"), spec.constant("b")
    E = ex.exp(add(mul(a, X), mul(b, T)))
    phi = coeffs.flag_poly(spec.n, a, b).to_expr()
    f = add(mul(E, Y), mul((a**3 + 2 * b) / (3 * a), E, Z), phi)
    return BuiltField(spec, log_field(f), [Guard(f, "nonzero", "f")])


BUILDERS = {
    "JM-P2A": _p2a, "JM-P2B": _p2b, "JM-PN": _pn, "JM-Y1": _y1, "JM-Y2": _y2, "JM-YN": _yn,
    "JM-L1": _l1, "JM-L2": _l2, "JM-L3": _l3, "JM-L4": _l4,
}


def build_jm(spec: FamilySpec) -> BuiltField:
    """Assemble W for a validated JM family spec."""
    try:
        builder = BUILDERS[spec.family]
    except KeyError:
        raise ValueError(f"{spec.family} is not a Jimbo-Miwa family") from None
    return builder(spec)
