"""Immutable expression trees over the independent variables t, x, y, z.

Nodes are built through the module-level constructors (``add``, ``mul``,
``power`` ...), which canonicalize on the way in: sums and products are
flattened, constants folded, like terms / like factors merged and children
sorted by a total structural order.  Two trees that are built from the same
mathematics in a different order therefore compare equal.

Parameter functions ("arbitrary functions" of a solution family) appear as
``Call`` nodes.  A call carries one derivative order per formal argument, so
``Call('rho', (s,), (2,))`` stands for rho''(s).  Bodies are supplied at
evaluation time through :class:`Bindings`.

Indefinite integrals are ``Antideriv`` nodes: the definite integral of the
integrand from a fixed rational base point up to the current value of the
integration variable.  The integration variable doubles as the dummy inside
the integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

VARIABLES = ("t", "x", "y", "z")

# |denominator| below this is treated as a pole in floating evaluation
POLE_EPS = 1e-12


class ExprError(Exception):
    pass


class UnboundSymbolError(ExprError):
    def __init__(self, name: str, kind: str = "symbol"):
        super().__init__(f"unbound {kind} {name!r}")
        self.name = name


class SingularPointError(ExprError, ArithmeticError):
    """Evaluation hit a pole, a nonpositive radicand or a nonpositive log argument."""

    def __init__(self, node: "Expr", reason: str):
        super().__init__(f"{reason} in {node}")
        self.node = node
        self.reason = reason


class NotExactError(ExprError):
    """Exact evaluation requested for a transcendental / irrational node."""


class CaptureError(ExprError):
    pass


# ---------------------------------------------------------------------------
# node classes


class Expr:
    __slots__ = ("_key", "_hash", "_fv")
    rank = -1

    def __init__(self):
        self._key = None
        self._hash = None
        self._fv = None

    def children(self) -> tuple["Expr", ...]:
        return ()

    def _make_key(self) -> tuple:
        raise NotImplementedError

    @property
    def key(self) -> tuple:
        k = self._key
        if k is None:
            k = self._key = self._make_key()
        return k

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = self._hash = hash(self.key)
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and self.key == other.key

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    @property
    def free_vars(self) -> frozenset[str]:
        fv = self._fv
        if fv is None:
            fv = self._fv = self._free_vars()
        return fv

    def _free_vars(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.children():
            out = out | c.free_vars
        return out

    # arithmetic sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __pow__(self, n):
        return power(self, n)

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        from .parser import to_text

        return to_text(self, strict=False)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self}>"


class Const(Expr):
    __slots__ = ("value",)
    rank = 0

    def __init__(self, value: Fraction):
        super().__init__()
        self.value = value

    def _make_key(self):
        return (0, self.value)

    def _free_vars(self):
        return frozenset()


class NamedConst(Expr):
    __slots__ = ("name",)
    rank = 1

    def __init__(self, name: str):
        super().__init__()
        self.name = name

    def _make_key(self):
        return (1, self.name)

    def _free_vars(self):
        return frozenset()


class Var(Expr):
    __slots__ = ("name",)
    rank = 2

    def __init__(self, name: str):
        super().__init__()
        self.name = name

    def _make_key(self):
        return (2, self.name)

    def _free_vars(self):
        return frozenset((self.name,))


class Call(Expr):
    __slots__ = ("name", "args", "orders")
    rank = 3

    def __init__(self, name: str, args: tuple[Expr, ...], orders: tuple[int, ...]):
        super().__init__()
        self.name = name
        self.args = args
        self.orders = orders

    def children(self):
        return self.args

    def _make_key(self):
        return (3, self.name, self.orders, tuple(a.key for a in self.args))


class Pow(Expr):
    """Integer power; the exponent is a nonzero integer other than 1."""

    __slots__ = ("base", "exp")
    rank = 4

    def __init__(self, base: Expr, exp: int):
        super().__init__()
        self.base = base
        self.exp = exp

    def children(self):
        return (self.base,)

    def _make_key(self):
        return (4, self.base.key, Fraction(self.exp))


class RPow(Expr):
    """Non-integer rational power; real-valued only for a positive base."""

    __slots__ = ("base", "exp")
    rank = 5

    def __init__(self, base: Expr, exp: Fraction):
        super().__init__()
        self.base = base
        self.exp = exp

    def children(self):
        return (self.base,)

    def _make_key(self):
        return (5, self.base.key, self.exp)


class Mul(Expr):
    __slots__ = ("factors",)
    rank = 6

    def __init__(self, factors: tuple[Expr, ...]):
        super().__init__()
        self.factors = factors

    def children(self):
        return self.factors

    def _make_key(self):
        return (6, tuple(f.key for f in self.factors))


class Add(Expr):
    __slots__ = ("terms",)
    rank = 7

    def __init__(self, terms: tuple[Expr, ...]):
        super().__init__()
        self.terms = terms

    def children(self):
        return self.terms

    def _make_key(self):
        return (7, tuple(t.key for t in self.terms))


class _Unary(Expr):
    __slots__ = ("arg",)
    fname = ""

    def __init__(self, arg: Expr):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (self.rank, self.arg.key)


class Exp(_Unary):
    __slots__ = ()
    rank = 8
    fname = "exp"


class Log(_Unary):
    __slots__ = ()
    rank = 9
    fname = "log"


class Sin(_Unary):
    __slots__ = ()
    rank = 10
    fname = "sin"


class Cos(_Unary):
    __slots__ = ()
    rank = 11
    fname = "cos"


class Antideriv(Expr):
    __slots__ = ("integrand", "var", "base")
    rank = 12

    def __init__(self, integrand: Expr, var: str, base: Fraction):
        super().__init__()
        self.integrand = integrand
        self.var = var
        self.base = base

    def children(self):
        return (self.integrand,)

    def _make_key(self):
        return (12, self.var, self.base, self.integrand.key)

    def _free_vars(self):
        return self.integrand.free_vars | {self.var}


# ---------------------------------------------------------------------------
# constructors


def const(v) -> Const:
    if isinstance(v, Const):
        return v
    if isinstance(v, float):
        raise TypeError("float constants are not allowed in expression trees")
    return Const(Fraction(v))


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, str):
        return Var(v)
    return const(v)


def var(name: str) -> Var:
    return Var(name)


T, X, Y, Z = (Var(v) for v in VARIABLES)


def named(name: str) -> NamedConst:
    return NamedConst(name)


def _sorted(nodes: Iterable[Expr]) -> tuple[Expr, ...]:
    return tuple(sorted(nodes, key=lambda e: e.key))


def _split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def _with_coeff(c: Fraction, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def add(*terms) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        t = as_expr(t)
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    c0 = Fraction(0)
    collected: dict[Expr, Fraction] = {}
    for t in flat:
        if isinstance(t, Const):
            c0 += t.value
            continue
        c, rest = _split_coeff(t)
        collected[rest] = collected.get(rest, Fraction(0)) + c
    out = [_with_coeff(c, r) for r, c in collected.items() if c != 0]
    if c0 != 0:
        out.append(Const(c0))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(_sorted(out))


def _base_exp(f: Expr) -> tuple[Expr, Fraction]:
    if isinstance(f, Pow):
        return f.base, Fraction(f.exp)
    if isinstance(f, RPow):
        return f.base, f.exp
    return f, Fraction(1)


def mul(*factors) -> Expr:
    flat: list[Expr] = []
    for f in factors:
        f = as_expr(f)
        if isinstance(f, Mul):
            flat.extend(f.factors)
        else:
            flat.append(f)
    c = Fraction(1)
    collected: dict[Expr, Fraction] = {}
    for f in flat:
        if isinstance(f, Const):
            c *= f.value
            if c == 0:
                return ZERO
            continue
        b, e = _base_exp(f)
        collected[b] = collected.get(b, Fraction(0)) + e
    out: list[Expr] = []
    for b, e in collected.items():
        if e == 0:
            continue
        p = _power_node(b, e)
        if isinstance(p, Const):
            c *= p.value
        else:
            out.append(p)
    if c == 0:
        return ZERO
    if not out:
        return Const(c)
    if c == 1 and len(out) == 1:
        return out[0]
    nodes = _sorted(out)
    if c != 1:
        nodes = (Const(c),) + nodes
    return Mul(nodes)


def _exact_root(v: Fraction, q: int) -> Fraction | None:
    if v < 0:
        return None

    def iroot(n: int) -> int | None:
        r = round(n ** (1.0 / q)) if n > 0 else 0
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == n:
                return cand
        return None

    a, b = iroot(v.numerator), iroot(v.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _power_node(b: Expr, e: Fraction) -> Expr:
    """Power node without distributing over products (used by ``mul``)."""
    if e == 0:
        return ONE
    if e == 1:
        return b
    if isinstance(b, Const):
        return power(b, e)
    if e.denominator == 1:
        return Pow(b, int(e))
    return RPow(b, e)


def power(b, n) -> Expr:
    b = as_expr(b)
    n = Fraction(n)
    if n == 0:
        return ONE
    if n == 1:
        return b
    if isinstance(b, Const):
        v = b.value
        if n.denominator == 1:
            if v == 0 and n < 0:
                raise SingularPointError(b, "division by zero")
            return Const(v ** int(n))
        if v == 0 and n > 0:
            return ZERO
        if v > 0:
            root = _exact_root(v, n.denominator)
            if root is not None:
                return Const(root**n.numerator)
        return RPow(b, n)
    if isinstance(b, Exp):
        return exp(mul(Const(n), b.arg))
    if isinstance(b, RPow):
        return power(b.base, b.exp * n)
    if n.denominator == 1:
        if isinstance(b, Pow):
            return power(b.base, b.exp * n)
        if isinstance(b, Mul):
            return mul(*[power(f, n) for f in b.factors])
        return Pow(b, int(n))
    return RPow(b, n)


def neg(e) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a, b) -> Expr:
    return add(a, neg(as_expr(b)))


def div(a, b) -> Expr:
    return mul(a, power(b, -1))


def exp(u) -> Expr:
    u = as_expr(u)
    if u == ZERO:
        return ONE
    if isinstance(u, Log):
        # exp(log v) = v on the real domain of log
        return u.arg
    return Exp(u)


def log(u) -> Expr:
    u = as_expr(u)
    if u == ONE:
        return ZERO
    if isinstance(u, Exp):
        return u.arg
    return Log(u)


def sin(u) -> Expr:
    u = as_expr(u)
    if u == ZERO:
        return ZERO
    return Sin(u)


def cos(u) -> Expr:
    u = as_expr(u)
    if u == ZERO:
        return ONE
    return Cos(u)


def sqrt(u) -> Expr:
    return power(u, Fraction(1, 2))


def call(name: str, *args, orders: tuple[int, ...] | None = None) -> Call:
    args_t = tuple(as_expr(a) for a in args)
    if orders is None:
        orders = (0,) * len(args_t)
    if len(orders) != len(args_t):
        raise ValueError("one derivative order per argument")
    return Call(name, args_t, tuple(int(o) for o in orders))


def antideriv(integrand, var_name: str, base=0) -> Expr:
    """Integral of ``integrand`` d``var_name`` from ``base`` to ``var_name``."""
    g = as_expr(integrand)
    base = Fraction(base)
    if g == ZERO:
        return ZERO
    if var_name not in g.free_vars:
        return mul(g, add(Var(var_name), Const(-base)))
    return Antideriv(g, var_name, base)


def rebuild(e: Expr, kids: tuple[Expr, ...]) -> Expr:
    """Reconstruct ``e`` with new children through the canonicalizing constructors."""
    if isinstance(e, Add):
        return add(*kids)
    if isinstance(e, Mul):
        return mul(*kids)
    if isinstance(e, Pow):
        return power(kids[0], e.exp)
    if isinstance(e, RPow):
        return power(kids[0], e.exp)
    if isinstance(e, Exp):
        return exp(kids[0])
    if isinstance(e, Log):
        return log(kids[0])
    if isinstance(e, Sin):
        return sin(kids[0])
    if isinstance(e, Cos):
        return cos(kids[0])
    if isinstance(e, Call):
        return Call(e.name, kids, e.orders)
    if isinstance(e, Antideriv):
        return antideriv(kids[0], e.var, e.base)
    return e


def walk(e: Expr):
    """Yield every distinct node of ``e`` once (pre-order)."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(n.children())


def size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def calls_in(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Call)}


# ---------------------------------------------------------------------------
# bindings


@dataclass
class ParamBinding:
    """Body of a parameter function over its formal arguments."""

    name: str
    formals: tuple[str, ...]
    body: Expr
    _derivs: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.formals = tuple(self.formals)
        extra = self.body.free_vars - set(self.formals)
        if extra:
            raise UnboundSymbolError(sorted(extra)[0], "variable in body of " + self.name)
        if any(isinstance(n, (Antideriv, Call)) for n in walk(self.body)):
            raise ExprError(f"body of {self.name} must be closed-form")

    def derivative(self, orders: tuple[int, ...]) -> Expr:
        if len(orders) != len(self.formals):
            raise ExprError(f"{self.name} takes {len(self.formals)} argument(s)")
        d = self._derivs.get(orders)
        if d is None:
            d = self.body
            for f, k in zip(self.formals, orders):
                for _ in range(k):
                    d = differentiate(d, f)
            self._derivs[orders] = d
        return d


@dataclass
class Bindings:
    functions: dict[str, ParamBinding] = field(default_factory=dict)
    constants: dict[str, Fraction] = field(default_factory=dict)

    def function(self, name: str) -> ParamBinding:
        try:
            return self.functions[name]
        except KeyError:
            raise UnboundSymbolError(name, "function") from None

    def constant(self, name: str) -> Fraction:
        try:
            return self.constants[name]
        except KeyError:
            raise UnboundSymbolError(name, "constant") from None

    def merged(self, other: "Bindings") -> "Bindings":
        return Bindings({**self.functions, **other.functions}, {**self.constants, **other.constants})


EMPTY = Bindings()


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: Expr, v: str, bindings: Bindings | None = None) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``.

    Antiderivatives obey the fundamental theorem when ``v`` is the
    integration variable and the Leibniz rule otherwise.  When ``bindings``
    is given every parameter call must be bound.
    """
    if bindings is not None:
        for name in calls_in(e):
            bindings.function(name)
    memo: dict[Expr, Expr] = {}

    def d(n: Expr) -> Expr:
        if v not in n.free_vars:
            return ZERO
        r = memo.get(n)
        if r is not None:
            return r
        if isinstance(n, Var):
            r = ONE
        elif isinstance(n, Add):
            r = add(*[d(c) for c in n.terms])
        elif isinstance(n, Mul):
            fs = n.factors
            parts = []
            for i, f in enumerate(fs):
                if v in f.free_vars:
                    parts.append(mul(d(f), *fs[:i], *fs[i + 1 :]))
            r = add(*parts)
        elif isinstance(n, (Pow, RPow)):
            r = mul(Const(Fraction(n.exp)), power(n.base, Fraction(n.exp) - 1), d(n.base))
        elif isinstance(n, Exp):
            r = mul(n, d(n.arg))
        elif isinstance(n, Log):
            r = mul(d(n.arg), power(n.arg, -1))
        elif isinstance(n, Sin):
            r = mul(cos(n.arg), d(n.arg))
        elif isinstance(n, Cos):
            r = mul(MINUS_ONE, sin(n.arg), d(n.arg))
        elif isinstance(n, Antideriv):
            if n.var == v:
                r = n.integrand
            else:
                r = antideriv(d(n.integrand), n.var, n.base)
        elif isinstance(n, Call):
            parts = []
            for k, a in enumerate(n.args):
                if v in a.free_vars:
                    orders = n.orders[:k] + (n.orders[k] + 1,) + n.orders[k + 1 :]
                    parts.append(mul(Call(n.name, n.args, orders), d(a)))
            r = add(*parts)
        else:  # pragma: no cover - constants handled by free_vars check
            r = ZERO
        memo[n] = r
        return r

    return d(e)


def diff(e: Expr, *vs: str) -> Expr:
    for v in vs:
        e = differentiate(e, v)
    return e


# ---------------------------------------------------------------------------
# substitution


def substitute(e: Expr, replacements: Mapping[str, Expr | int | Fraction]) -> Expr:
    """Simultaneous, capture-free replacement of variables."""
    repl = {k: as_expr(v) for k, v in replacements.items() if as_expr(v) != Var(k)}
    if not repl:
        return e
    return _subst(e, repl, {})


def _subst(e: Expr, repl: dict[str, Expr], memo: dict) -> Expr:
    if not (e.free_vars & repl.keys()):
        return e
    r = memo.get(e)
    if r is not None:
        return r
    if isinstance(e, Var):
        r = repl[e.name]
    elif isinstance(e, Antideriv):
        if e.var in repl:
            raise CaptureError(f"cannot substitute the integration variable {e.var!r}")
        inner = {k: v for k, v in repl.items() if k in e.integrand.free_vars}
        for v in inner.values():
            if e.var in v.free_vars:
                raise CaptureError(f"replacement {v} would be captured by the integral over {e.var}")
        r = antideriv(_subst(e.integrand, inner, {}), e.var, e.base)
    else:
        r = rebuild(e, tuple(_subst(c, repl, memo) for c in e.children()))
    memo[e] = r
    return r


def inline_calls(e: Expr, bindings: Bindings) -> Expr:
    """Replace every parameter call by its (differentiated) bound body."""
    memo: dict[Expr, Expr] = {}

    def go(n: Expr) -> Expr:
        r = memo.get(n)
        if r is not None:
            return r
        if isinstance(n, Call):
            pb = bindings.function(n.name)
            body = pb.derivative(n.orders)
            r = substitute(body, dict(zip(pb.formals, (go(a) for a in n.args))))
        elif n.children():
            r = rebuild(n, tuple(go(c) for c in n.children()))
        else:
            r = n
        memo[n] = r
        return r

    return go(e)


def is_exact_tree(e: Expr, bindings: Bindings = EMPTY) -> bool:
    """True when ``e`` (with calls inlined) uses only field operations and integer powers."""
    try:
        e = inline_calls(e, bindings)
    except UnboundSymbolError:
        return False
    return not any(isinstance(n, (Exp, Log, Sin, Cos, Antideriv, RPow)) for n in walk(e))


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class Point4:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.t, self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError("Point4 coordinates must be finite")

    def env(self) -> dict[str, float]:
        return {"t": self.t, "x": self.x, "y": self.y, "z": self.z}


class Evaluator:
    """Vectorized floating evaluation of expression trees.

    ``env`` maps variable names to arrays (broadcast together).  In strict
    mode any singular operation raises :class:`SingularPointError`; otherwise
    the offending entries become NaN so that a caller can reject them.
    """

    def __init__(self, env: Mapping, bindings: Bindings = EMPTY, *, strict: bool = False,
                 tol: float = 1e-10, depth: int = 0):
        arrays = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in env.values()])
        self.env = dict(zip(env.keys(), arrays))
        self.shape = arrays[0].shape if arrays else ()
        self.bindings = bindings
        self.strict = strict
        self.tol = tol
        self.depth = depth
        self.memo: dict[Expr, np.ndarray] = {}

    def __call__(self, e: Expr) -> np.ndarray:
        return np.broadcast_to(self.eval(e), self.shape)

    def _bad(self, node: Expr, mask, value, reason: str):
        if np.any(mask):
            if self.strict:
                raise SingularPointError(node, reason)
            value = np.where(mask, np.nan, value)
        return value

    def eval(self, e: Expr):
        r = self.memo.get(e)
        if r is not None:
            return r
        r = self._eval(e)
        self.memo[e] = r
        return r

    def _eval(self, e: Expr):
        if isinstance(e, Const):
            return float(e.value)
        if isinstance(e, NamedConst):
            return float(self.bindings.constant(e.name))
        if isinstance(e, Var):
            try:
                return self.env[e.name]
            except KeyError:
                raise UnboundSymbolError(e.name, "variable") from None
        if isinstance(e, Add):
            acc = self.eval(e.terms[0])
            for t in e.terms[1:]:
                acc = acc + self.eval(t)
            return acc
        if isinstance(e, Mul):
            acc = self.eval(e.factors[0])
            for f in e.factors[1:]:
                acc = acc * self.eval(f)
            return acc
        if isinstance(e, Pow):
            b = self.eval(e.base)
            if e.exp < 0:
                b = self._bad(e, np.abs(b) < POLE_EPS, b, "pole")
                with np.errstate(divide="ignore", invalid="ignore"):
                    return np.power(b, float(e.exp))
            return np.power(b, e.exp) if e.exp != 2 else b * b
        if isinstance(e, RPow):
            b = self.eval(e.base)
            mask = b <= 0 if e.exp > 0 else b < POLE_EPS
            b = self._bad(e, mask, b, "nonpositive radicand")
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.power(b, float(e.exp))
        if isinstance(e, Exp):
            with np.errstate(over="ignore"):
                return np.exp(self.eval(e.arg))
        if isinstance(e, Log):
            a = self.eval(e.arg)
            a = self._bad(e, a <= 0, a, "nonpositive log argument")
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.log(a)
        if isinstance(e, Sin):
            return np.sin(self.eval(e.arg))
        if isinstance(e, Cos):
            return np.cos(self.eval(e.arg))
        if isinstance(e, Call):
            pb = self.bindings.function(e.name)
            body = pb.derivative(e.orders)
            args = [self.eval(a) for a in e.args]
            sub = Evaluator(dict(zip(pb.formals, args)) or {"_": 0.0}, self.bindings,
                            strict=self.strict, tol=self.tol, depth=self.depth)
            return sub.eval(body)
        if isinstance(e, Antideriv):
            from .quadrature import antideriv_batch

            return antideriv_batch(self, e)
        raise TypeError(f"cannot evaluate {type(e).__name__}")


def evaluate(e: Expr, p: Point4 | Mapping, bindings: Bindings = EMPTY, mode: str = "floating",
             tol: float = 1e-10):
    """Evaluate ``e`` at one point.

    ``mode='exact'`` returns a :class:`Fraction` and requires a tree without
    transcendental functions, antiderivatives or irrational powers.
    """
    env = p.env() if isinstance(p, Point4) else dict(p)
    if mode == "exact":
        return ExactEvaluator({k: Fraction(v) for k, v in env.items()}, bindings).eval(e)
    if mode != "floating":
        raise ValueError(f"unknown mode {mode!r}")
    v = float(Evaluator(env, bindings, strict=True, tol=tol)(e))
    if not math.isfinite(v):
        raise SingularPointError(e, "non-finite value")
    return v


def evaluate_many(e: Expr, env: Mapping, bindings: Bindings = EMPTY, tol: float = 1e-10) -> np.ndarray:
    """Evaluate on arrays; singular entries come back as NaN."""
    return Evaluator(env, bindings, tol=tol)(e)


class ExactEvaluator:
    def __init__(self, env: Mapping[str, Fraction], bindings: Bindings = EMPTY):
        self.env = dict(env)
        self.bindings = bindings
        self.memo: dict[Expr, Fraction] = {}

    def eval(self, e: Expr) -> Fraction:
        r = self.memo.get(e)
        if r is None:
            r = self.memo[e] = self._eval(e)
        return r

    def _eval(self, e: Expr) -> Fraction:
        if isinstance(e, Const):
            return e.value
        if isinstance(e, NamedConst):
            return self.bindings.constant(e.name)
        if isinstance(e, Var):
            try:
                return self.env[e.name]
            except KeyError:
                raise UnboundSymbolError(e.name, "variable") from None
        if isinstance(e, Add):
            return sum((self.eval(t) for t in e.terms), Fraction(0))
        if isinstance(e, Mul):
            acc = Fraction(1)
            for f in e.factors:
                acc *= self.eval(f)
            return acc
        if isinstance(e, Pow):
            b = self.eval(e.base)
            if b == 0 and e.exp < 0:
                raise SingularPointError(e, "pole")
            return b**e.exp
        if isinstance(e, RPow):
            b = self.eval(e.base)
            if b <= 0:
                raise SingularPointError(e, "nonpositive radicand")
            root = _exact_root(b, e.exp.denominator)
            if root is None:
                raise NotExactError(f"irrational power in {e}")
            return root**e.exp.numerator
        if isinstance(e, Call):
            pb = self.bindings.function(e.name)
            sub = ExactEvaluator(dict(zip(pb.formals, (self.eval(a) for a in e.args))), self.bindings)
            return sub.eval(pb.derivative(e.orders))
        raise NotExactError(f"{type(e).__name__} node has no exact value")


def lambdify(e: Expr, bindings: Bindings = EMPTY, tol: float = 1e-10) -> Callable:
    """Black-box evaluator ``f(t, x, y, z)`` accepting scalars or arrays."""

    def f(t, x, y, z):
        return Evaluator({"t": t, "x": x, "y": y, "z": z}, bindings, tol=tol)(e)

    return f
