"""Command-line front end.

    jmkd list-families [--json]
    jmkd verify JOB [--tol T] [--delta D] [--seed S] [--out DIR]
    jmkd sample JOB [--seed S] [--out DIR]
    jmkd discrepancies [JOB] [--out FILE]

Exit codes: 0 when every verification passes, 1 on a residual failure,
2 on a configuration error (the message names the offending field).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import coeffs
from . import expr as ex
from .families import FAMILIES, FAMILY_IDS, BuiltField, SpecError, build, spec_from_mapping
from .verify import (DEFAULT_DELTA, SYMBOLIC_TOL, VARS, DomainSpec, DomainTooSingularError, guard_margin,
                     sample_domain, verify_field)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    def __init__(self, message: str, field: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class Job:
    name: str
    field: BuiltField
    points: int
    seed: int
    fd_points: int
    tol: float
    delta: float
    grid: dict | None
    domain: dict | None


# ---------------------------------------------------------------------------
# job files


def load_entries(path: str) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read job file ({e.strerror})", "job") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}", "job") from None
    if isinstance(doc, dict) and "jobs" in doc:
        doc = doc["jobs"]
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list) or not all(isinstance(d, dict) for d in doc):
        raise ConfigError("expected an object, a list of objects or {\"jobs\": [...]}", "jobs")
    return doc


def _int(v, field: str, lo: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"must be an integer >= {lo}", field)
    return v


def _float(v, field: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v) or v <= 0:
        raise ConfigError("must be a positive number", field)
    return float(v)


def make_job(entry: dict, index: int, args: argparse.Namespace) -> Job:
    try:
        spec = spec_from_mapping(entry)
    except SpecError as e:
        raise ConfigError(str(e).split(": ", 1)[-1], e.field) from None
    ver = entry.get("verify", {})
    if not isinstance(ver, dict):
        raise ConfigError("must be an object", "verify")
    for key in ver:
        if key not in ("points", "seed", "fd_points"):
            raise ConfigError("unexpected field", f"verify.{key}")
    points = _int(ver.get("points", 200), "verify.points", 1)
    seed = _int(ver.get("seed", 0), "verify.seed")
    fd_points = _int(ver.get("fd_points", 0), "verify.fd_points")
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    tol = _float(entry.get("tol", SYMBOLIC_TOL), "tol")
    delta = _float(entry.get("delta", DEFAULT_DELTA), "delta")
    if getattr(args, "tol", None) is not None:
        tol = args.tol
    if getattr(args, "delta", None) is not None:
        delta = args.delta
    domain = entry.get("domain")
    if domain is not None:
        if not isinstance(domain, dict):
            raise ConfigError("must map variables to [lo, hi]", "domain")
        for v, iv in domain.items():
            if v not in VARS:
                raise ConfigError("unknown variable", f"domain.{v}")
            if (not isinstance(iv, list) or len(iv) != 2
                    or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in iv)
                    or not iv[0] < iv[1]):
                raise ConfigError("must be [lo, hi] with lo < hi", f"domain.{v}")
    grid = entry.get("grid")
    if grid is not None and not isinstance(grid, dict):
        raise ConfigError("must be an object", "grid")
    name = entry.get("name", f"{index:03d}-{spec.family}")
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError("must be a non-empty string without '/'", "name")
    try:
        field_ = build(spec)
    except SpecError as e:
        raise ConfigError(str(e).split(": ", 1)[-1], e.field) from None
    except (ex.ExprError, coeffs.InvalidConstantError, coeffs.RecurrenceError) as e:
        raise ConfigError(str(e), "family") from None
    return Job(name, field_, points, seed, fd_points, tol, delta, grid, domain)


def load_jobs(path: str, args: argparse.Namespace) -> list[Job]:
    return [make_job(e, i, args) for i, e in enumerate(load_entries(path))]


# ---------------------------------------------------------------------------
# grids and CSV


def grid_axes(job: Job) -> dict[str, np.ndarray]:
    """Axis values per variable; unspecified variables sit at the domain midpoint."""
    box = dict(zip(VARS, job.field.spec.info.domain))
    if job.domain:
        box.update({k: tuple(v) for k, v in job.domain.items()})
    axes = {}
    for v in VARS:
        spec = (job.grid or {}).get(v)
        where = f"grid.{v}"
        if spec is None:
            axes[v] = np.array([(box[v][0] + box[v][1]) / 2])
        elif isinstance(spec, (int, float)) and not isinstance(spec, bool):
            axes[v] = np.array([float(spec)])
        elif isinstance(spec, list) and spec and all(isinstance(c, (int, float)) for c in spec):
            axes[v] = np.array(spec, dtype=float)
        elif isinstance(spec, dict) and {"from", "to", "num"} <= spec.keys():
            axes[v] = np.linspace(float(spec["from"]), float(spec["to"]), _int(spec["num"], f"{where}.num", 1))
        else:
            raise ConfigError("must be a number, a list of numbers or {from, to, num}", where)
    for k in job.grid or {}:
        if k not in VARS:
            raise ConfigError("unknown variable", f"grid.{k}")
    return axes


def grid_points(job: Job) -> dict[str, np.ndarray]:
    axes = grid_axes(job)
    rows = list(itertools.product(*(axes[v] for v in VARS)))
    return {v: np.array([r[i] for r in rows]) for i, v in enumerate(VARS)}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def field_csv(job: Job, pts: dict[str, np.ndarray]) -> str:
    f = job.field
    cols = [("W", f.W)]
    if f.u is not None:
        cols += [("u", f.u), ("v", f.v)]
    ev = ex.Evaluator(pts, f.bindings)
    # grid points are not screened by the sampler: blank every column where the field is undefined
    with np.errstate(invalid="ignore"):
        outside = ~(guard_margin(f.guards, pts, f.bindings) > 0)
    values = [np.where(outside, np.nan, np.asarray(ev(e), dtype=float)) for _, e in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(VARS) + [c for c, _ in cols])
    for i in range(len(pts["t"])):
        w.writerow([_fmt(pts[v][i]) for v in VARS] + [_fmt(col[i]) for col in values])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_list(args) -> int:
    rows = []
    for fid in FAMILY_IDS:
        info = FAMILIES[fid]
        rows.append({"family": fid, "equation": info.equation, "summary": info.summary,
                     "required": info.required(), "optional": info.optional()})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['family']:8s} {r['equation']}  required: {', '.join(r['required']) or '-'}")
            if r["optional"]:
                print(f"{'':12s}optional: {'; '.join(r['optional'])}")
    return EXIT_OK


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(args) -> int:
    jobs = load_jobs(args.job, args)
    out = _out_dir(args)
    status = EXIT_OK
    for job in jobs:
        try:
            rep = verify_field(job.field, count=job.points, seed=job.seed, delta=job.delta, tol=job.tol,
                               fd_points=job.fd_points, box=job.domain)
        except DomainTooSingularError as e:
            raise ConfigError(str(e), f"{job.name}.domain") from None
        (out / f"{job.name}.report.json").write_text(rep.to_json() + "\n")
        if job.grid is not None:
            (out / f"{job.name}.csv").write_text(field_csv(job, grid_points(job)))
        worst = max(rep.max_residual.values())
        print(f"{job.name}: {'PASS' if rep.passed else 'FAIL'} max normalized residual {worst:.3e} "
              f"(exact: {rep.exact})")
        if not rep.passed:
            status = EXIT_FAIL
    return status


def cmd_sample(args) -> int:
    jobs = load_jobs(args.job, args)
    out = _out_dir(args)
    for job in jobs:
        if job.grid is not None:
            pts = grid_points(job)
        else:
            dom = DomainSpec.for_field(job.field, count=job.points, seed=job.seed, delta=job.delta, box=job.domain)
            try:
                pts = sample_domain(dom, job.field.bindings)
            except DomainTooSingularError as e:
                raise ConfigError(str(e), f"{job.name}.domain") from None
        path = out / f"{job.name}.csv"
        path.write_text(field_csv(job, pts))
        print(f"{job.name}: wrote {len(pts['t'])} rows to {path}")
    return EXIT_OK


def cmd_discrepancies(args) -> int:
    opts: dict[str, Any] = {}
    if args.job:
        entries = load_entries(args.job)
        if len(entries) != 1:
            raise ConfigError("expected a single object", "job")
        opts = entries[0]
    allowed = {"n_max", "a", "b", "k", "seed"}
    for key in opts:
        if key not in allowed:
            raise ConfigError("unexpected field", key)
    n_max = _int(opts.get("n_max", 5), "n_max")
    vals = {}
    for key, default in (("a", Fraction(2)), ("b", Fraction(1, 3)), ("k", Fraction(1, 2))):
        try:
            vals[key] = Fraction(str(opts.get(key, default)))
        except (ValueError, ZeroDivisionError):
            raise ConfigError("must be a rational number", key) from None
    if vals["a"] == 0:
        raise ConfigError("must be nonzero", "a")
    seed = _int(opts.get("seed", 0), "seed")
    report = coeffs.discrepancy_report(coeffs.standard_tables(n_max, seed=seed, **vals))
    if args.out:
        Path(args.out).write_text(report)
        summary = json.loads(report)["summary"]
        print(f"wrote {summary['total']} comparisons ({summary['mismatches']} mismatches) to {args.out}")
    else:
        sys.stdout.write(report)
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jmkd", description="Build and verify exact solution families.")
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("list-families", help="list family ids with their bindings")
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_list)
    for name, fn, helptext in (("verify", cmd_verify, "verify residuals, write reports"),
                               ("sample", cmd_sample, "evaluate fields on a grid or sample, write CSV")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("job")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", default="jmkd-out")
        s.add_argument("--delta", type=float)
        if name == "verify":
            s.add_argument("--tol", type=float)
        s.set_defaults(run=fn)
    s = sub.add_parser("discrepancies", help="recurrence versus closed-form report")
    s.add_argument("job", nargs="?")
    s.add_argument("--out")
    s.set_defaults(run=cmd_discrepancies)
    return p


def main(argv: list[str] | None = None) -> int:
    args = parser().parse_args(argv)
    for flag in ("tol", "delta"):
        v = getattr(args, flag, None)
        if v is not None and not (np.isfinite(v) and v > 0):
            print(f"error: --{flag}: must be a positive number", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.run(args)
    except ConfigError as e:
        msg = str(e)
        if e.field == "family" and "unknown family" in msg:
            msg = f"family: unknown family ({msg.split('unknown family ', 1)[-1]})"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
