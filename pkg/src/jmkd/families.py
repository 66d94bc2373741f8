"""Family registry: ids, parameter slots, validation, defaults and random draws.

A :class:`FamilySpec` names one family and carries every binding it needs.
Parameter functions are :class:`~jmkd.expr.ParamBinding` objects keyed by
slot name; indexed families of functions use keys such as ``gamma[3]``.
Indexed constants (``k_r``, ``b_j``, ``c_p``) live in ``indexed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import expr as ex
from .parser import parse

F = Fraction


class SpecError(ValueError):
    """Invalid family specification; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class Slot:
    name: str
    formals: tuple[str, ...]
    default: str | None = None  # grammar body used when the slot is unbound
    doc: str = ""


@dataclass(frozen=True)
class FamilyInfo:
    id: str
    equation: str  # "JM" or "KD"
    summary: str
    n_min: int | None = None  # None: no degree
    constants: tuple[str, ...] = ()
    functions: tuple[Slot, ...] = ()
    indexed_functions: Slot | None = None  # body slot shared by gamma[...] entries
    indexed_constants: str | None = None  # "k_r", "b_j" or "c_p"
    signed: bool = False
    domain: tuple[tuple[float, float], ...] = ((0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))

    def required(self) -> list[str]:
        out = []
        if self.n_min is not None:
            out.append(f"n (>= {self.n_min})")
        out += list(self.constants)
        for s in self.functions:
            if s.default is None:
                out.append(f"{s.name}({','.join(s.formals)})")
        return out

    def optional(self) -> list[str]:
        out = [f"{s.name}({','.join(s.formals)}) = {s.default}" for s in self.functions if s.default is not None]
        if self.indexed_functions is not None:
            out.append(f"{self.indexed_functions.name}[j]({','.join(self.indexed_functions.formals)})"
                       f" {self.indexed_functions.doc}")
        if self.indexed_constants:
            doc = INDEXED_DOC.get((self.id, self.indexed_constants)) or INDEXED_DOC[self.indexed_constants]
            out.append(f"{self.indexed_constants} {doc}")
        if self.signed:
            out.append("sign = +")
        return out


INDEXED_DOC = {
    ("JM-L1", "k_r"): "(r = 0..n-1, default 0)",
    ("JM-L3", "k_r"): "(r = 0..n, default k_0 = 1, others 0)",
    "b_j": "(j = 0..n, default b_n = 1, others 0)",
    "c_p": "(p = 0..n, default c_n = 1, others 0)",
}

FAMILIES: dict[str, FamilyInfo] = {f.id: f for f in [
    FamilyInfo("JM-P2A", "JM", "quadratic in x, leading coefficient alpha_t(t,z)",
               functions=(Slot("alpha", ("t", "z")), Slot("gamma", ("y", "z")), Slot("rho", ("z", "t")),
                          Slot("eta", ("y", "z")), Slot("zeta", ("z", "t")))),
    FamilyInfo("JM-P2B", "JM", "quadratic in x, leading coefficient 1/(9t/2 + beta(y,z))", n_min=0,
               functions=(Slot("beta", ("y", "z")), Slot("eta", ("y", "z")), Slot("zeta", ("z", "t"))),
               indexed_functions=Slot("gamma", ("z",), "0", "(j = -1..n, default 0)")),
    FamilyInfo("JM-PN", "JM", "degree-n polynomial in x with poles at z = g(t)", n_min=3,
               functions=(Slot("g", ("t",)), Slot("phi", ("z", "t")), Slot("f", ("z", "t")), Slot("h", ("t",))),
               indexed_functions=Slot("gamma", ("t",), "0", "(j = 2..n, default gamma[n] = 1, others 0)")),
    FamilyInfo("JM-Y1", "JM", "linear in y over the inviscid Burgers kernel",
               functions=(Slot("c", ("t",)), Slot("d", ("t",)), Slot("phi", ("t",)), Slot("f", ("t", "z"))),
               domain=((0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (2.0, 3.0))),
    FamilyInfo("JM-Y2", "JM", "quadratic in y with a square-root coefficient",
               functions=(Slot("b", ("t",)), Slot("h", ("z",)), Slot("eta", ("t",)), Slot("g", ("t",)),
                          Slot("l", ("z", "t")))),
    FamilyInfo("JM-YN", "JM", "y^n with a square-root coefficient", n_min=2,
               functions=(Slot("phi", ("t",)), Slot("h", ("z",)), Slot("g", ("t",)), Slot("f", ("t",)),
                          Slot("eta", ("z", "t")))),
    FamilyInfo("JM-L1", "JM", "2 f_x / f, f polynomial in x plus eta(y + k z)", n_min=1,
               constants=("k",), functions=(Slot("eta", ("s",)),), indexed_constants="k_r"),
    FamilyInfo("JM-L2", "JM", "2 / (x + C y + k + rho(t + 2 C z / 3))",
               constants=("C", "k"), functions=(Slot("rho", ("s",)),)),
    FamilyInfo("JM-L3", "JM", "2 / (x + g(y,z) + b t), g polynomial in y", n_min=2,
               constants=("b",), functions=(Slot("F", ("z",), "0"),), indexed_constants="k_r"),
    FamilyInfo("JM-L4", "JM", "2 f_x / f with exponential y, z part and flag polynomial", n_min=0,
               constants=("a", "b")),
    FamilyInfo("KD-Q1", "KD", "quadratic in x, A = 1/(a y + psi)",
               constants=("a", "b"),
               functions=(Slot("psi", ("t",)), Slot("fm1", ("t",)), Slot("f4", ("t",)), Slot("phi", ("t",)),
                          Slot("sigma", ("t",)))),
    FamilyInfo("KD-Q2", "KD", "quadratic in x, A = 1/(-2 a y + psi)",
               constants=("a", "b"),
               functions=(Slot("psi", ("t",)), Slot("fm1", ("t",)), Slot("f1", ("t",)), Slot("phi", ("t",)),
                          Slot("sigma", ("t",)))),
    FamilyInfo("KD-LX", "KD", "(2/a) log f, f polynomial in the travelling coordinate", n_min=1,
               constants=("a", "b"), indexed_constants="b_j", signed=True),
    FamilyInfo("KD-LY", "KD", "(2/a) log f, f polynomial in y times an exponential", n_min=0,
               constants=("a", "b"), indexed_constants="c_p", signed=True),
]}

FAMILY_IDS = tuple(FAMILIES)


@dataclass
class FamilySpec:
    family: str
    n: int | None = None
    constants: dict[str, Fraction] = field(default_factory=dict)
    functions: dict[str, ex.ParamBinding] = field(default_factory=dict)
    indexed: dict[int, Fraction] = field(default_factory=dict)
    sign: int = 1

    @property
    def info(self) -> FamilyInfo:
        try:
            return FAMILIES[self.family]
        except KeyError:
            raise SpecError(f"unknown family {self.family!r}", "family") from None

    def constant(self, name: str) -> Fraction:
        return self.constants[name]

    def bindings(self) -> ex.Bindings:
        return ex.Bindings(dict(self.functions), {})

    def validate(self) -> "FamilySpec":
        info = self.info
        if info.n_min is None:
            if self.n is not None:
                raise SpecError("this family takes no degree", "n")
        else:
            if self.n is None:
                raise SpecError("missing degree", "n")
            if not isinstance(self.n, int) or self.n < info.n_min:
                raise SpecError(f"degree must be an integer >= {info.n_min}", "n")
        for c in info.constants:
            if c not in self.constants:
                raise SpecError("missing constant", c)
        for c in self.constants:
            if c not in info.constants:
                raise SpecError("unexpected constant", c)
        if "a" in info.constants and self.constants["a"] == 0:
            raise SpecError("must be nonzero", "a")
        slots = {s.name: s for s in info.functions}
        for s in info.functions:
            if s.name not in self.functions:
                if s.default is None:
                    raise SpecError("missing parameter function", s.name)
                self.functions[s.name] = ex.ParamBinding(s.name, s.formals, parse(s.default, s.formals))
        for name, pb in self.functions.items():
            base = name.split("[")[0]
            if name in slots:
                want = len(slots[name].formals)
            elif info.indexed_functions is not None and base == info.indexed_functions.name and "[" in name:
                try:
                    j = int(name[len(base) + 1:-1])
                except ValueError:
                    raise SpecError("bad index", name) from None
                lo, hi = self.indexed_function_range()
                if self.family == "JM-P2B" and j < -1:
                    raise SpecError("Laurent tail coefficients below -1 generate an infinite series and are "
                                    "not supported", name)
                if not lo <= j <= hi:
                    raise SpecError(f"index must lie in {lo}..{hi}", name)
                want = len(info.indexed_functions.formals)
            else:
                raise SpecError("unexpected parameter function", name)
            if len(pb.formals) != want:
                raise SpecError(f"expects {want} formal argument(s)", name)
        if self.indexed:
            if info.indexed_constants is None:
                raise SpecError("this family takes no indexed constants", "indexed")
            lo, hi = self.indexed_constant_range()
            for j in self.indexed:
                if not lo <= j <= hi:
                    raise SpecError(f"index must lie in {lo}..{hi}", f"{info.indexed_constants}[{j}]")
        if self.sign not in (1, -1):
            raise SpecError("must be + or -", "sign")
        if self.sign == -1 and not info.signed:
            raise SpecError("only the KD logarithmic families take a sign", "sign")
        return self

    def indexed_function_range(self) -> tuple[int, int]:
        if self.family == "JM-P2B":
            return -1, self.n
        return 2, self.n

    def indexed_constant_range(self) -> tuple[int, int]:
        if self.family == "JM-L1":
            return 0, self.n - 1
        return 0, self.n

    def gamma(self, j: int, *args: ex.Expr) -> ex.Expr:
        name = f"gamma[{j}]"
        if name in self.functions:
            return ex.call(name, *args)
        if self.family == "JM-PN" and j == self.n:
            return ex.ONE
        return ex.ZERO


@dataclass(frozen=True)
class Guard:
    expr: ex.Expr
    kind: str  # "nonzero" (|g| >= delta) or "positive" (g >= delta)
    label: str


@dataclass
class BuiltField:
    spec: FamilySpec
    W: ex.Expr
    guards: list[Guard]
    u: ex.Expr | None = None
    v: ex.Expr | None = None

    @property
    def equation(self) -> str:
        return self.spec.info.equation

    @property
    def bindings(self) -> ex.Bindings:
        return self.spec.bindings()


def build(spec: FamilySpec) -> BuiltField:
    spec.validate()
    if spec.info.equation == "JM":
        from .jm import build_jm

        return build_jm(spec)
    from .kd import build_kd

    return build_kd(spec)


def binding(name: str, body: str, formals) -> ex.ParamBinding:
    return ex.ParamBinding(name, tuple(formals), parse(body, formals))


# ---------------------------------------------------------------------------
# random draws from the grammar


def _rat(rng: np.random.Generator, lo: float, hi: float, den: int = 8) -> Fraction:
    k = int(rng.integers(int(np.ceil(lo * den)), int(np.floor(hi * den)) + 1))
    return F(k, den)


def _fmt(c: Fraction) -> str:
    s = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return f"({s})" if c < 0 else s


def random_body(rng: np.random.Generator, formals, budget: float = 1.0, polynomial: bool = False,
                max_terms: int = 3) -> str:
    """Random grammar string bounded by ``budget`` for arguments in [-1, 1].

    Terms are rational multiples of monomials of degree <= 2 and, unless
    ``polynomial``, of sin/cos/exp of a small multiple of one formal.
    """
    nterms = int(rng.integers(1, max_terms + 1))
    weights = rng.dirichlet(np.ones(nterms)) * budget
    parts = []
    for w in weights:
        c = _rat(rng, -w, w, 16)
        if c == 0:
            continue
        kind = int(rng.integers(0, 2 if polynomial else 5))
        v = formals[int(rng.integers(0, len(formals)))]
        if kind == 0:
            parts.append(f"{_fmt(c)}*{v}")
        elif kind == 1:
            v2 = formals[int(rng.integers(0, len(formals)))]
            parts.append(f"{_fmt(c)}*{v}*{v2}")
        elif kind == 2:
            parts.append(f"{_fmt(c)}*sin({_fmt(_rat(rng, -1, 1, 4))}*{v})")
        elif kind == 3:
            parts.append(f"{_fmt(c)}*cos({_fmt(_rat(rng, -1, 1, 4))}*{v})")
        else:
            parts.append(f"{_fmt(c / 3)}*exp({_fmt(_rat(rng, -1, 1, 4))}*{v})")
    return " + ".join(parts) if parts else "0"


def random_spec(family: str, rng: np.random.Generator, n_max: int = 5, polynomial: bool = False) -> FamilySpec:
    """Draw a valid spec whose guards are comfortably satisfiable on the default domain."""
    info = FAMILIES[family]
    R = lambda lo, hi, den=8: _rat(rng, lo, hi, den)  # noqa: E731
    body = lambda formals, budget=1.0: random_body(rng, formals, budget, polynomial)  # noqa: E731
    fn: dict[str, str] = {}
    consts: dict[str, Fraction] = {}
    indexed: dict[int, Fraction] = {}
    n = None
    if info.n_min is not None:
        n = int(rng.integers(info.n_min, max(info.n_min, n_max) + 1))
    sign = 1
    if family == "JM-P2A":
        fn = {"alpha": f"{_fmt(R(1 / 8, 1 / 2))}*t*z + {body('tz', 0.25)}", "gamma": body("yz"), "rho": body("zt"), "eta": body("yz"),
              "zeta": body("zt")}
    elif family == "JM-P2B":
        fn = {"beta": f"2 + {body('yz', 0.5)}", "eta": body("yz"), "zeta": body("zt")}
        for j in range(-1, n + 1):
            if rng.random() < 0.7:
                fn[f"gamma[{j}]"] = random_body(rng, "z", 1.0, True, 2)
    elif family == "JM-PN":
        fn = {"g": f"4 + {body('t', 0.5)}", "phi": body("zt", 0.5), "f": body("zt"), "h": body("t")}
        for j in range(2, n + 1):
            if rng.random() < 0.7:
                fn[f"gamma[{j}]"] = random_body(rng, "t", 0.5, polynomial, 2)
    elif family == "JM-Y1":
        fn = {"c": body("t"), "d": body("t", 0.5), "phi": body("t", 0.5), "f": body("tz")}
    elif family == "JM-Y2":
        fn = {"b": f"1 + {body('t', 0.5)}", "h": body("z", 0.5), "eta": f"6 + {body('t')}", "g": body("t"),
              "l": body("zt")}
    elif family == "JM-YN":
        fn = {"phi": f"1 + {body('t', 0.5)}", "h": body("z", 0.5), "g": f"6 + {body('t')}", "f": body("t"),
              "eta": body("zt")}
    elif family == "JM-L1":
        consts = {"k": R(-1, 1)}
        indexed = {r: R(-2, 2) for r in range(n) if rng.random() < 0.7}
        fn = {"eta": body("s")}
    elif family == "JM-L2":
        consts = {"C": R(-1, 1), "k": R(2, 4)}
        fn = {"rho": body("s")}
    elif family == "JM-L3":
        consts = {"b": R(-1, 1)}
        indexed = {r: R(-1, 1) for r in range(n + 1) if rng.random() < 0.7}
        indexed[0] = R(1, 2)
        fn = {"F": body("z")}
    elif family == "JM-L4":
        consts = {"a": R(1 / 2, 3 / 2) * (1 if rng.random() < 0.5 else -1), "b": R(-1, 1)}
    elif family in ("KD-Q1", "KD-Q2"):
        a = R(1 / 2, 3 / 2) * (1 if rng.random() < 0.5 else -1)
        consts = {"a": a, "b": R(-1, 1)}
        lift = 3 * abs(a) + 2
        fn = {"psi": f"{_fmt(lift)} + {body('t', 0.5)}", "fm1": body("t"), "phi": body("t"), "sigma": body("t")}
        fn["f4" if family == "KD-Q1" else "f1"] = body("t", 0.25)
    elif family in ("KD-LX", "KD-LY"):
        consts = {"a": R(1 / 2, 3 / 2) * (1 if rng.random() < 0.5 else -1), "b": R(-1 / 2, 1 / 2)}
        indexed = {j: R(-1, 1) for j in range(n) if rng.random() < 0.5}
        indexed[0] = R(4, 8)
        if family == "KD-LY":
            indexed[n] = R(1 / 2, 1)
            if n == 0:
                indexed[0] = R(1, 2)
        sign = 1 if rng.random() < 0.5 else -1
    else:  # pragma: no cover
        raise KeyError(family)
    slots = {s.name: s.formals for s in info.functions}
    functions = {}
    for name, src in fn.items():
        formals = slots.get(name) or info.indexed_functions.formals
        functions[name] = binding(name, src, formals)
    return FamilySpec(family, n, consts, functions, indexed, sign).validate()


def spec_from_mapping(entry: Mapping) -> FamilySpec:
    """Spec from a job-file entry (see the README for the schema)."""
    if not isinstance(entry, Mapping):
        raise SpecError("job entry must be an object", "entry")
    fam = entry.get("family")
    if not isinstance(fam, str):
        raise SpecError("missing family id", "family")
    if fam not in FAMILIES:
        raise SpecError(f"unknown family {fam!r}", "family")
    info = FAMILIES[fam]
    reserved = {"family", "n", "sign", "verify", "grid", "domain", "gamma", "k_r", "b_j", "c_p", "name", "tol",
                "delta"}
    n = entry.get("n")
    if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
        raise SpecError("must be an integer", "n")
    consts = {}
    for c in info.constants:
        if c in entry:
            consts[c] = _number(entry[c], c)
    slots = {s.name: s for s in info.functions}
    functions = {}
    for key, val in entry.items():
        if key in reserved or key in info.constants:
            continue
        if key not in slots:
            raise SpecError("unexpected field", key)
        functions[key] = _function(key, val, slots[key].formals)
    if "gamma" in entry:
        if info.indexed_functions is None:
            raise SpecError("this family takes no indexed functions", "gamma")
        g = entry["gamma"]
        if not isinstance(g, Mapping):
            raise SpecError("must map indices to functions", "gamma")
        for j, val in g.items():
            name = f"gamma[{_index(j, 'gamma')}]"
            functions[name] = _function(name, val, info.indexed_functions.formals)
    indexed = {}
    for key in ("k_r", "b_j", "c_p"):
        if key in entry:
            if info.indexed_constants != key:
                raise SpecError("not a parameter of this family", key)
            vals = entry[key]
            if not isinstance(vals, Mapping):
                raise SpecError("must map indices to numbers", key)
            for j, v in vals.items():
                indexed[_index(j, key)] = _number(v, f"{key}[{j}]")
    sign = entry.get("sign", "+")
    if sign not in ("+", "-", 1, -1):
        raise SpecError("must be '+' or '-'", "sign")
    sign = 1 if sign in ("+", 1) else -1
    try:
        return FamilySpec(fam, n, consts, functions, indexed, sign).validate()
    except SpecError:
        raise
    except ex.ExprError as e:
        raise SpecError(str(e), "functions") from None


def _index(j, field: str) -> int:
    try:
        return int(j)
    except (TypeError, ValueError):
        raise SpecError(f"bad index {j!r}", field) from None


def _number(v, field: str) -> Fraction:
    if isinstance(v, bool):
        raise SpecError("must be a number", field)
    if isinstance(v, int):
        return F(v)
    if isinstance(v, float):
        return F(str(v))
    if isinstance(v, str):
        try:
            return F(v.strip())
        except ValueError:
            raise SpecError(f"not a rational number: {v!r}", field) from None
    raise SpecError("must be a number", field)


def _function(name: str, val, default_formals) -> ex.ParamBinding:
    from .parser import ParseError

    if isinstance(val, (int, float)) and not isinstance(val, bool):
        val = str(_number(val, name))
    if isinstance(val, str):
        formals, src = tuple(default_formals), val
    elif isinstance(val, Mapping) and "body" in val:
        formals = tuple(val.get("args", default_formals))
        src = val["body"]
        if not isinstance(src, str) or not all(isinstance(f, str) for f in formals):
            raise SpecError("body must be a string and args a list of names", name)
    else:
        raise SpecError("must be a grammar string or {args, body}", name)
    try:
        return ex.ParamBinding(name, formals, parse(src, formals))
    except ParseError as e:
        raise SpecError(str(e), name) from None
    except ex.ExprError as e:
        raise SpecError(str(e), name) from None
