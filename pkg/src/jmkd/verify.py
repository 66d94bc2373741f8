"""Residual evaluation, finite-difference oracle and domain sampling.

Residuals are assembled as lists of terms so that each point can be
normalized by the largest term magnitude there: the reported value is
``|sum| / max(1, max |term|)``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .families import BuiltField, Guard

F = Fraction
VARS = ("t", "x", "y", "z")

SYMBOLIC_TOL = 1e-8
FD_TOL = 1e-4
CONSTRAINT_TOL = 1e-10
DEFAULT_DELTA = 0.1


class OracleUnavailableError(ArithmeticError):
    """The finite-difference stencil touches a guarded or singular region."""


class DomainTooSingularError(RuntimeError):
    """Rejection sampling could not find enough admissible points."""


# ---------------------------------------------------------------------------
# residual operators


def jm_terms(W: ex.Expr) -> list[ex.Expr]:
    d = ex.diff
    Wx, Wy = d(W, "x"), d(W, "y")
    return [d(Wx, "x", "x", "y"), ex.mul(3, d(Wx, "y"), Wx), ex.mul(3, Wy, d(Wx, "x")),
            ex.mul(2, d(Wy, "t")), ex.mul(-3, d(Wx, "z"))]


def kd_potential_terms(W: ex.Expr, a, b) -> list[ex.Expr]:
    a, b = F(a), F(b)
    d = ex.diff
    Wx = d(W, "x")
    Wxx = d(Wx, "x")
    Wy = d(W, "y")
    return [d(Wx, "t"), ex.mul(-1, d(Wxx, "x", "x")), ex.mul(-6 * b, Wx, Wxx),
            ex.mul(F(3, 2) * a * a, Wx, Wx, Wxx), ex.mul(-3, d(Wy, "y")), ex.mul(3 * a, Wxx, Wy)]


def kd_system_terms(u: ex.Expr, v: ex.Expr, a, b) -> tuple[list[ex.Expr], list[ex.Expr]]:
    a, b = F(a), F(b)
    d = ex.diff
    ux = d(u, "x")
    r1 = [d(u, "t"), ex.mul(-1, d(ux, "x", "x")), ex.mul(-6 * b, u, ux), ex.mul(F(3, 2) * a * a, u, u, ux),
          ex.mul(-3, d(v, "y")), ex.mul(3 * a, ux, v)]
    r2 = [d(u, "y"), ex.mul(-1, d(v, "x"))]
    return r1, r2


def residual_expr(terms: Sequence[ex.Expr]) -> ex.Expr:
    return ex.add(*terms)


def jm_residual(W: ex.Expr) -> ex.Expr:
    return residual_expr(jm_terms(W))


def kd_potential_residual(W: ex.Expr, a, b) -> ex.Expr:
    return residual_expr(kd_potential_terms(W, a, b))


def kd_system_residual(u: ex.Expr, v: ex.Expr, a, b) -> tuple[ex.Expr, ex.Expr]:
    r1, r2 = kd_system_terms(u, v, a, b)
    return residual_expr(r1), residual_expr(r2)


def term_groups(field_: BuiltField) -> dict[str, list[ex.Expr]]:
    """Named residual term lists for a built field."""
    spec = field_.spec
    if field_.equation == "JM":
        return {"JM": jm_terms(field_.W)}
    a, b = spec.constant("a"), spec.constant("b")
    r1, r2 = kd_system_terms(field_.u, field_.v, a, b)
    return {"KD": kd_potential_terms(field_.W, a, b), "R1": r1, "R2": r2}


# ---------------------------------------------------------------------------
# evaluation


def evaluate_terms(terms: Sequence[ex.Expr], env: dict, bindings: ex.Bindings,
                   tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Raw residual and normalized residual arrays (NaN where singular)."""
    ev = ex.Evaluator(env, bindings, tol=tol)
    vals = np.array([ev(t) for t in terms], dtype=float)
    raw = vals.sum(axis=0)
    with np.errstate(invalid="ignore"):
        scale = np.maximum(1.0, np.max(np.abs(vals), axis=0))
    return raw, np.abs(raw) / scale


def guard_margin(guards: Sequence[Guard], env: dict, bindings: ex.Bindings) -> np.ndarray:
    """Smallest guard value (|g| or g, per kind) at each point; NaN if undefined."""
    ev = ex.Evaluator(env, bindings)
    shape = np.broadcast(*[np.asarray(v) for v in env.values()]).shape
    out = np.full(shape, np.inf)
    for g in guards:
        val = np.asarray(ev(g.expr), dtype=float)
        m = np.abs(val) if g.kind == "nonzero" else val
        out = np.where(np.isnan(m), np.nan, np.minimum(out, m))
    return out


# ---------------------------------------------------------------------------
# domains


@dataclass
class DomainSpec:
    box: dict[str, tuple[float, float]]
    guards: list[Guard] = field(default_factory=list)
    delta: float = DEFAULT_DELTA
    count: int = 200
    seed: int = 0

    @classmethod
    def for_field(cls, field_: BuiltField, *, count: int = 200, seed: int = 0, delta: float = DEFAULT_DELTA,
                  box: dict | None = None) -> "DomainSpec":
        default = dict(zip(VARS, field_.spec.info.domain))
        if box:
            default.update({k: tuple(map(float, v)) for k, v in box.items()})
        return cls(default, list(field_.guards), delta, count, seed)


def sample_domain(domain: DomainSpec, bindings: ex.Bindings = ex.EMPTY) -> dict[str, np.ndarray]:
    """Deterministic rejection sample of ``count`` points with every guard >= delta.

    At most ``100 * count`` candidates are drawn before giving up.
    """
    rng = np.random.default_rng(domain.seed)
    want = domain.count
    cap = 100 * want
    kept = {v: [] for v in VARS}
    have = drawn = 0
    while have < want:
        if drawn >= cap:
            raise DomainTooSingularError(
                f"only {have} of {want} admissible points after {drawn} draws (delta={domain.delta})")
        m = min(max(want, 64), cap - drawn)
        cand = {v: rng.uniform(*domain.box[v], size=m) for v in VARS}
        drawn += m
        ok = np.ones(m, dtype=bool)
        if domain.guards:
            margin = guard_margin(domain.guards, cand, bindings)
            ok = np.isfinite(margin) & (margin >= domain.delta)
        for v in VARS:
            kept[v].extend(cand[v][ok][: want - have].tolist())
        have = len(kept["t"])
    return {v: np.array(kept[v]) for v in VARS}


# ---------------------------------------------------------------------------
# finite differences

_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _orders(multi_index) -> tuple[int, int, int, int]:
    if isinstance(multi_index, dict):
        return tuple(int(multi_index.get(v, 0)) for v in VARS)
    if isinstance(multi_index, str):
        return tuple(multi_index.count(v) for v in VARS)
    o = tuple(int(k) for k in multi_index)
    if len(o) != 4:
        raise ValueError("multi-index must have four entries (t, x, y, z)")
    return o


def fd_partial(f: Callable, multi_index, p, h: float | None = None, *,
               guard: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None = None,
               delta: float = DEFAULT_DELTA) -> float:
    """Central-difference partial derivative with one Richardson step.

    ``f(t, x, y, z)`` must accept arrays.  ``multi_index`` is a 4-tuple of
    orders, a dict, or a string such as ``"xxy"``.  The default step is
    ``eps**(1/(k+4))`` for total order ``k``.  ``guard`` returns the guard
    margin at arrays of points; if any stencil point has margin below
    ``delta``, or ``f`` is non-finite there, :class:`OracleUnavailableError`
    is raised.
    """
    orders = _orders(multi_index)
    if any(k > 4 or k < 0 for k in orders):
        raise ValueError("orders 0..4 per variable are supported")
    k = sum(orders)
    if h is None:
        h = float(np.finfo(float).eps) ** (1.0 / (k + 4))
    base = p.env() if isinstance(p, ex.Point4) else dict(zip(VARS, p)) if not isinstance(p, dict) else p
    base = [float(base[v]) for v in VARS]
    offs, wts = [], []
    for combo in itertools.product(*[list(zip(*_STENCILS[o])) for o in orders]):
        offs.append([c[0] for c in combo])
        wts.append(math.prod(c[1] for c in combo))
    offs = np.array(offs, dtype=float)
    wts = np.array(wts)
    pts = []
    for step in (h, h / 2):
        pts.append(np.array(base) + offs * step)
    allp = np.vstack(pts)
    cols = [allp[:, i] for i in range(4)]
    if guard is not None:
        margin = np.asarray(guard(*cols), dtype=float)
        if np.any(np.isnan(margin)) or np.any(margin < delta):
            raise OracleUnavailableError("finite-difference stencil touches a guarded region")
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(f(*cols), dtype=float), (len(allp),))
    if not np.all(np.isfinite(vals)):
        raise OracleUnavailableError("non-finite value on the finite-difference stencil")
    nrow = len(offs)
    d_h = float(wts @ vals[:nrow]) / h**k
    d_h2 = float(wts @ vals[nrow:]) / (h / 2) ** k
    return (4 * d_h2 - d_h) / 3 if k else d_h


# ---------------------------------------------------------------------------
# reports


@dataclass
class ResidualReport:
    family: str
    equation: str
    points: int
    seed: int
    max_residual: dict[str, float]
    tolerance: dict[str, float]
    passed: bool
    exact: str = "not attempted"  # "zero", "nonzero", "not attempted", "not applicable"
    fd_max_error: float | None = None
    fd_points: int = 0
    fd_skipped: int = 0
    rejected: int = 0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def exact_check(terms: Sequence[ex.Expr], bindings: ex.Bindings, env: dict[str, np.ndarray],
                max_points: int = 12) -> str:
    """Evaluate the residual in rational arithmetic at (rationalized) sample points."""
    R = ex.add(*terms)
    if not ex.is_exact_tree(R, bindings):
        return "not applicable"
    R = ex.inline_calls(R, bindings)
    n = min(max_points, len(env["t"]))
    for i in range(n):
        pt = {v: F(float(env[v][i])).limit_denominator(1000) for v in VARS}
        try:
            val = ex.ExactEvaluator(pt, bindings).eval(R)
        except ex.SingularPointError:
            continue
        if val != 0:
            return "nonzero"
    return "zero"


def verify_field(field_: BuiltField, *, count: int = 200, seed: int = 0, delta: float = DEFAULT_DELTA,
                 tol: float = SYMBOLIC_TOL, fd_points: int = 0, fd_tol: float = FD_TOL,
                 box: dict | None = None, exact: bool = True, quad_tol: float = 1e-10) -> ResidualReport:
    """Sample the domain, evaluate every residual group and optionally cross-check with FD."""
    b = field_.bindings
    dom = DomainSpec.for_field(field_, count=count, seed=seed, delta=delta, box=box)
    env = sample_domain(dom, b)
    groups = term_groups(field_)
    tols = {g: (CONSTRAINT_TOL if g == "R2" else tol) for g in groups}
    maxes, notes, rejected = {}, [], 0
    for g, terms in groups.items():
        _, norm = evaluate_terms(terms, env, b, tol=quad_tol)
        bad = ~np.isfinite(norm)
        rejected = max(rejected, int(bad.sum()))
        maxes[g] = float(np.max(norm[~bad])) if np.any(~bad) else float("nan")
    passed = all(maxes[g] <= tols[g] for g in groups)
    report = ResidualReport(field_.spec.family, field_.equation, count, seed, maxes, tols, passed,
                            rejected=rejected, notes=notes)
    if exact:
        key = "JM" if field_.equation == "JM" else "KD"
        report.exact = exact_check(groups[key], b, env)
        if report.exact == "nonzero":
            report.passed = False
    if fd_points:
        err, used, skipped = fd_crosscheck(field_, env, fd_points, delta)
        report.fd_max_error, report.fd_points, report.fd_skipped = err, used, skipped
        if err is not None and err > fd_tol:
            report.passed = False
    return report


JM_DERIVATIVES = ("x", "y", "xx", "xy", "ty", "xz", "xxxy")
KD_DERIVATIVES = ("x", "y", "xx", "tx", "yy", "xxxx")


def fd_crosscheck(field_: BuiltField, env: dict[str, np.ndarray], npts: int,
                  delta: float = DEFAULT_DELTA) -> tuple[float | None, int, int]:
    """Compare every residual derivative of W with its finite-difference estimate.

    The error at a derivative is ``|fd - symbolic| / max(1, |symbolic|)``;
    steps come from :func:`fd_plateau`.
    Returns (max error, points used, points skipped).
    """
    b = field_.bindings
    f = ex.lambdify(field_.W, b, tol=1e-13)
    guards = field_.guards
    names = JM_DERIVATIVES if field_.equation == "JM" else KD_DERIVATIVES
    symbolic = {s: ex.diff(field_.W, *s) for s in names}

    def guard(t, x, y, z):
        if not guards:
            return np.full(np.shape(t), np.inf)
        return guard_margin(guards, {"t": t, "x": x, "y": y, "z": z}, b)

    worst, used, skipped = None, 0, 0
    for i in range(min(npts, len(env["t"]))):
        p = [float(env[v][i]) for v in VARS]
        ev = ex.Evaluator(dict(zip(VARS, p)), b, tol=1e-13)
        try:
            errs = []
            for s, e in symbolic.items():
                approx = fd_plateau(f, s, p, guard=guard, delta=delta / 2)
                exact = float(ev(e))
                errs.append(abs(approx - exact) / max(1.0, abs(exact)))
        except OracleUnavailableError:
            skipped += 1
            continue
        used += 1
        worst = max(errs) if worst is None else max(worst, *errs)
    return worst, used, skipped


def fd_plateau(f: Callable, multi_index, p, *, guard=None, delta: float = DEFAULT_DELTA,
               h0: float = 0.05, levels: int = 8) -> float:
    """fd_partial on the step ladder h0 / 2^k; returns the estimate where consecutive steps agree best."""
    est = []
    for k in range(levels):
        try:
            est.append(fd_partial(f, multi_index, p, h0 / 2**k, guard=guard, delta=delta))
        except OracleUnavailableError:
            if est:
                break
            continue
    if not est:
        raise OracleUnavailableError("no admissible finite-difference step")
    if len(est) == 1:
        return est[0]
    diffs = [abs(est[i + 1] - est[i]) for i in range(len(est) - 1)]
    j = int(np.argmin(diffs))
    return est[j + 1]
