"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import json
import time
from fractions import Fraction as F

import numpy as np
import pytest

from jmkd import coeffs
from jmkd import expr as ex
from jmkd.cli import main
from jmkd.expr import T
from jmkd.families import FAMILY_IDS, build, random_spec
from jmkd.jm import burgers_kernel, burgers_residual
from jmkd.parser import ParseError, parse, to_text
from jmkd.verify import fd_plateau, verify_field

DRAWS, POINTS, N_MAX = 5, 200, 5


@pytest.fixture(scope="module")
def family_runs():
    """Every family, DRAWS seeded draws (odd draws use polynomial bindings), POINTS points each."""
    runs = []
    start = time.perf_counter()
    for fam in FAMILY_IDS:
        for d in range(DRAWS):
            spec = random_spec(fam, np.random.default_rng([0, d]), n_max=N_MAX, polynomial=(d % 2 == 1))
            runs.append((fam, d, verify_field(build(spec), count=POINTS, seed=d)))
    return runs, time.perf_counter() - start


def test_criterion_1_family_residuals(family_runs, criterion):
    runs, elapsed = family_runs
    worst = max(max(r.max_residual[g] for g in r.max_residual if g != "R2") for _, _, r in runs)
    exact = [r.exact for _, _, r in runs]
    exact_ok = "nonzero" not in exact and exact.count("zero") >= 5
    ok = (worst <= 1e-8 and exact_ok and elapsed <= 60 and len({f for f, _, _ in runs}) == len(FAMILY_IDS)
          and all(r.points >= 200 for _, _, r in runs))
    criterion(1, ok, f"{len(FAMILY_IDS)} families x {DRAWS} draws x {POINTS} points, max residual {worst:.1e}, "
                     f"{exact.count('zero')} exact-zero instances, {elapsed:.1f}s")
    assert ok


def _rand_poly_t(rng, deg):
    return ex.add(*[ex.mul(F(int(rng.integers(-9, 10)), int(rng.integers(1, 5))), ex.power(T, k))
                    for k in range(deg + 1)])


def test_criterion_2_burgers_kernel(criterion):
    rng = np.random.default_rng(2)
    zeros = 0
    trials = 10
    for _ in range(trials):
        A = burgers_kernel(_rand_poly_t(rng, int(rng.integers(0, 4))), _rand_poly_t(rng, int(rng.integers(0, 4))))
        R = burgers_residual(A)
        checks = []
        for _ in range(5):
            pt = {v: F(int(rng.integers(-20, 21)), int(rng.integers(1, 7))) for v in "txyz"}
            try:
                checks.append(ex.evaluate(R, pt, mode="exact") == 0)
            except ex.SingularPointError:
                continue
        zeros += bool(checks) and all(checks)
    ok = zeros == trials
    criterion(2, ok, f"exact residual zero for {zeros}/{trials} random polynomial (c, d)")
    assert ok


def test_criterion_3_flag_equation(criterion):
    rng = np.random.default_rng(3)
    pairs = []
    while len(pairs) < 5:
        a = F(int(rng.integers(-6, 7)), int(rng.integers(1, 5)))
        if a:
            pairs.append((a, F(int(rng.integers(-6, 7)), int(rng.integers(1, 5)))))
    identities = all(coeffs.flag_residual(coeffs.flag_poly(n, a, b), a, b).is_zero()
                     for a, b in pairs for n in range(9))
    a, b = pairs[0]
    table = coeffs.flag_table(8, a, b)
    first = next(d for d in table.discrepancies if d.index == 1)
    x, t = coeffs.Poly.symbol("x"), coeffs.Poly.symbol("t")
    derived = x + ((b - a**3) / a) * t
    ok = identities and table.coeffs[1] == derived and not first.match
    criterion(3, ok, f"n <= 8 over {len(pairs)} (a, b) pairs; degree-one member {first.recurrence_value}, "
                     f"printed form flagged")
    assert ok


def test_criterion_4_coefficient_report(criterion):
    e_ok = not coeffs.e_check(10).mismatches()
    r1 = coeffs.discrepancy_report(coeffs.standard_tables(5))
    r2 = coeffs.discrepancy_report(coeffs.standard_tables(5))
    doc = json.loads(r1)
    families = {r["family"] for r in doc["records"]}
    want = {"JM-P2B", "JM-PN", "KD-LX", "KD-LY", "KD-Q1", "KD-Q2"}
    ok = e_ok and r1 == r2 and want <= families
    criterion(4, ok, f"e recurrence = closed form for m <= 10; report of {doc['summary']['total']} comparisons "
                     f"({doc['summary']['mismatches']} flagged) is byte-identical across runs")
    assert ok


def _corpus(n, seed=5):
    """Random smooth trees in t, x, y, z; every third one wraps nested antiderivatives."""
    rng = np.random.default_rng(seed)
    V = [ex.T, ex.X, ex.Y, ex.Z]

    def leaf():
        if rng.random() < 0.6:
            return V[int(rng.integers(4))]
        return ex.const(F(int(rng.integers(-3, 4)), int(rng.integers(1, 4))))

    def tree(depth):
        if depth == 0:
            return leaf()
        k = int(rng.integers(7))
        a = tree(depth - 1)
        if k == 0:
            return ex.add(a, tree(depth - 1))
        if k == 1:
            return ex.mul(a, tree(depth - 1))
        if k == 2:
            return ex.sin(a)
        if k == 3:
            return ex.exp(ex.mul(F(1, 2), ex.cos(a)))
        if k == 4:
            return ex.power(ex.add(3, ex.sin(a)), F(-1, 2))
        if k == 5:
            return ex.log(ex.add(2, ex.cos(a)))
        return ex.power(a, int(rng.integers(2, 4)))

    out = []
    for i in range(n):
        e = tree(3)
        if i % 3 == 0:
            u, w = "txyz"[int(rng.integers(4))], "txyz"[int(rng.integers(4))]
            inner = ex.antideriv(ex.sin(ex.add(e, ex.var(u))), u)
            e = ex.antideriv(ex.mul(inner, ex.cos(ex.add(ex.var(w), tree(1)))), w)
        out.append(e)
    return out


def test_criterion_5_differentiation_engine(criterion):
    corpus = _corpus(50)
    nested = sum(isinstance(e, ex.Antideriv) and any(isinstance(s, ex.Antideriv) for s in ex.walk(e.integrand))
                 for e in corpus)
    rng = np.random.default_rng(6)
    worst = 0.0
    for e in corpus:
        f = ex.lambdify(e, tol=1e-13)
        p = [float(v) for v in rng.uniform(0.1, 0.6, 4)]
        env = dict(zip("txyz", p))
        for idx in ("x", "t", "yz", "xx"):
            sym = float(ex.Evaluator(env, tol=1e-13)(ex.diff(e, *idx)))
            num = fd_plateau(f, idx, p)
            worst = max(worst, abs(num - sym) / max(1.0, abs(sym)))
    ok = worst <= 1e-5 and nested >= 15
    criterion(5, ok, f"50 expressions ({nested} with nested antiderivatives), max relative error {worst:.1e}")
    assert ok


def test_criterion_6_kd_system(family_runs, criterion):
    runs, _ = family_runs
    kd = [r for fam, _, r in runs if fam.startswith("KD-")]
    r1 = max(r.max_residual["R1"] for r in kd)
    r2 = max(r.max_residual["R2"] for r in kd)
    ok = len(kd) == 4 * DRAWS and r1 <= 1e-8 and r2 <= 1e-10
    criterion(6, ok, f"{len(kd)} KD instances, system residual {r1:.1e}, u_y - v_x {r2:.1e}")
    assert ok


def _grammar_corpus(n, seed=7):
    rng = np.random.default_rng(seed)

    def gen(depth):
        if depth == 0 or rng.random() < 0.25:
            c = int(rng.integers(4))
            return ["s", "w", str(int(rng.integers(0, 20))), f"{int(rng.integers(0, 9))}.{int(rng.integers(1, 99))}"][c]
        k = int(rng.integers(6))
        if k == 0:
            return f"{gen(depth - 1)} {'+-*'[int(rng.integers(3))]} {gen(depth - 1)}"
        if k == 1:
            return f"{gen(depth - 1)} / {int(rng.integers(1, 9))}"
        if k == 2:
            return f"{['exp', 'log', 'sin', 'cos'][int(rng.integers(4))]}({gen(depth - 1)})"
        if k == 3:
            return f"({gen(depth - 1)})^{['2', '3', '-1', '(1/2)', '(-3/2)'][int(rng.integers(5))]}"
        if k == 4:
            return f"-{gen(depth - 1)}"
        return f"({gen(depth - 1)})"

    return [gen(4) for _ in range(n)]


MALFORMED = ["s +", "s + $", "(s", "s)", "s^x", "q + 1", "sin s", "", "2 ** s", "s^", "exp()", "1..2", "s w"]


def test_criterion_7_parser(criterion):
    corpus = _grammar_corpus(200)
    same = 0
    for src in corpus:
        e = parse(src, ["s", "w"])
        same += parse(to_text(e), ["s", "w"]) == e
    positioned = 0
    for src in MALFORMED:
        try:
            parse(src, ["s", "w"])
        except ParseError as err:
            positioned += isinstance(err.offset, int) and 0 <= err.offset <= len(src.encode())
    ok = same == len(corpus) and positioned == len(MALFORMED)
    criterion(7, ok, f"round trip {same}/{len(corpus)}, positioned errors {positioned}/{len(MALFORMED)}")
    assert ok


def test_criterion_8_cli_determinism(tmp_path, criterion):
    jobs = {"jobs": [
        {"family": "JM-L2", "C": 0, "k": 0, "rho": "0", "verify": {"points": 200, "seed": 7}},
        {"family": "KD-LX", "n": 3, "a": 2, "b": "1/3", "verify": {"points": 100, "seed": 4},
         "grid": {"x": {"from": 0, "to": 1, "num": 5}, "y": [0, 0.5]}},
        {"family": "JM-P2B", "n": 2, "beta": "2 + y^2", "eta": "y", "zeta": "z*t",
         "gamma": {"0": "z", "-1": "1"}, "verify": {"points": 50, "seed": 1, "fd_points": 3}},
    ]}
    path = tmp_path / "jobs.json"
    path.write_text(json.dumps(jobs))
    snapshots = []
    for run in ("a", "b"):
        out = tmp_path / run
        codes = (main(["verify", str(path), "--out", str(out)]),
                 main(["sample", str(path), "--out", str(out / "sample")]),
                 main(["discrepancies", "--out", str(out / "report.json")]))
        files = {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
        snapshots.append((codes, files))
    ok = snapshots[0] == snapshots[1] and snapshots[0][0] == (0, 0, 0)
    criterion(8, ok, f"{len(snapshots[0][1])} artifacts byte-identical across two runs")
    assert ok
