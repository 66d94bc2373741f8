"""Adaptive quadrature for antiderivative nodes.

Every antiderivative is a definite integral from its base point to the
current value of the integration variable.  The integral is mapped to the
unit interval and integrated with a batched Gauss-Kronrod (7, 15) pair: all
evaluation points share one subdivision of [0, 1], an interval is halved
while the worst embedded error estimate over the batch exceeds its share of
the tolerance.  Nested antiderivatives recurse with the tolerance divided by
``NEST_FACTOR``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

import numpy as np

from .expr import (
    EMPTY,
    Antideriv,
    Bindings,
    Evaluator,
    Expr,
    Point4,
    SingularPointError,
    antideriv,
)

DEFAULT_TOL = 1e-10
MAX_DEPTH = 40
NEST_FACTOR = 10

# Kronrod abscissae on [-1, 1] (positive half, descending) and weights
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 ascending nodes
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_g = np.zeros(15)
_g[[1, 3, 5]] = _WG[:3]
_g[[13, 11, 9]] = _WG[:3]
_g[7] = _WG[3]
GAUSS_W = _g


class QuadratureError(ArithmeticError):
    pass


class SingularIntervalError(QuadratureError, SingularPointError):
    def __init__(self, node: Expr, reason: str = "pole inside integration interval"):
        SingularPointError.__init__(self, node, reason)


class ConvergenceError(QuadratureError):
    pass


def unit_integral(sample: Callable[[np.ndarray], np.ndarray], tol: float, max_depth: int = MAX_DEPTH,
                  strict: bool = True, node: Expr | None = None) -> np.ndarray:
    """Integrate a batch of functions over [0, 1].

    ``sample(s)`` receives the node array ``s`` (shape ``(15,)``) and returns
    values of shape ``batch + (15,)``.  Entries whose integrand is non-finite
    come back as NaN (lax mode) or raise :class:`SingularIntervalError`.
    """
    total = None
    bad = None
    stack = [(0.0, 1.0, 0)]
    eps = np.finfo(float).eps
    while stack:
        a, b, depth = stack.pop()
        half = 0.5 * (b - a)
        try:
            vals = np.asarray(sample(a + half * (NODES + 1.0)), dtype=float)
        except SingularIntervalError:
            raise
        except SingularPointError as exc:
            raise SingularIntervalError(node) from exc
        finite = np.isfinite(vals).all(axis=-1)
        if not finite.all():
            if strict:
                raise SingularIntervalError(node)
            vals = np.where(finite[..., None], vals, 0.0)
        kr = half * (vals @ KRONROD_W)
        ga = half * (vals @ GAUSS_W)
        err = np.abs(kr - ga)
        bad = ~finite if bad is None else bad | ~finite
        errmax = float(np.max(err)) if err.size else 0.0
        # rounding floor: the integrand cannot be resolved below eps * |values| * width
        scale = half * float(np.max(np.abs(vals))) if vals.size else 0.0
        if errmax <= max(tol * (b - a), 100 * eps * scale) or (depth >= max_depth and errmax <= tol):
            total = kr if total is None else total + kr
        elif depth >= max_depth:
            raise ConvergenceError(f"subdivision depth {max_depth} exceeded (error {errmax:.3e})")
        else:
            mid = a + half
            stack.append((mid, b, depth + 1))
            stack.append((a, mid, depth + 1))
    if bad is not None and bad.any():
        total = np.where(bad, np.nan, total)
    return total


def unit_integral_gl(sample: Callable[[np.ndarray], np.ndarray], tol: float, max_panels: int = 4096) -> np.ndarray:
    """Composite 10-point Gauss-Legendre with panel doubling (second, independent rule)."""
    x, w = np.polynomial.legendre.leggauss(10)
    panels = 1
    prev = None
    while True:
        edges = np.linspace(0.0, 1.0, panels + 1)
        acc = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            h = 0.5 * (b - a)
            acc = acc + h * (np.asarray(sample(a + h * (x + 1.0))) @ w)
        if prev is not None and np.max(np.abs(acc - prev)) <= tol:
            return acc
        if panels >= max_panels:
            raise ConvergenceError("panel limit exceeded")
        prev = acc
        panels *= 2


def antideriv_batch(ev: Evaluator, node: Antideriv, rule: str = "gk15") -> np.ndarray:
    """Value of ``node`` at every point of the evaluator's batch."""
    try:
        upper = ev.env[node.var]
    except KeyError:
        from .expr import UnboundSymbolError

        raise UnboundSymbolError(node.var, "variable") from None
    lo = float(node.base)
    span = upper - lo
    inner_tol = ev.tol / NEST_FACTOR
    base_env = {k: v[..., None] for k, v in ev.env.items()}

    def sample(s: np.ndarray) -> np.ndarray:
        env = dict(base_env)
        env[node.var] = lo + span[..., None] * s
        sub = Evaluator(env, ev.bindings, strict=ev.strict, tol=inner_tol, depth=ev.depth + 1)
        return sub(node.integrand) * span[..., None]

    width = float(np.max(np.abs(span))) if np.size(span) else 0.0
    if width == 0.0:
        return np.zeros(np.shape(upper))
    if rule == "gk15":
        return unit_integral(sample, ev.tol, strict=ev.strict, node=node)
    if rule == "gl":
        return unit_integral_gl(sample, ev.tol)
    raise ValueError(f"unknown rule {rule!r}")


def antiderivative_value(integrand: Expr, var: str, base, upper: float, context: Point4 | dict,
                         bindings: Bindings = EMPTY, tol: float = DEFAULT_TOL, rule: str = "gk15") -> float:
    """Integral of ``integrand`` in ``var`` from ``base`` to ``upper``.

    The remaining coordinates are taken from ``context``; ``tol`` is the
    absolute error target of the embedded estimate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    env = context.env() if isinstance(context, Point4) else dict(context)
    env[var] = upper
    node = antideriv(integrand, var, Fraction(base))
    ev = Evaluator(env, bindings, strict=True, tol=tol)
    if not isinstance(node, Antideriv):
        return float(ev(node))
    return float(antideriv_batch(ev, node, rule=rule))
