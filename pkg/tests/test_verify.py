import math
from fractions import Fraction as F

import numpy as np
import pytest

from jmkd import expr as ex
from jmkd.expr import T, X, Y, Z
from jmkd.families import FAMILY_IDS, Guard, build, random_spec
from jmkd.verify import (DomainSpec, DomainTooSingularError, OracleUnavailableError, evaluate_terms, exact_check,
                         fd_crosscheck, fd_partial, fd_plateau, jm_residual, jm_terms, kd_potential_residual,
                         kd_system_residual, sample_domain, term_groups, verify_field)

BOX = {"t": (0.0, 1.0), "x": (-1.0, 1.0), "y": (-1.0, 1.0), "z": (-1.0, 1.0)}


def at(e, **kw):
    env = {"t": 0.0, "x": 0.0, "y": 0.0, "z": 0.0, **kw}
    return float(ex.evaluate(e, env))


def test_jm_residual_examples():
    assert jm_residual(ex.const(5)) == ex.ZERO
    assert at(jm_residual(ex.mul(-1, X, Y, ex.power(Z, -1))), x=1, y=1, z=2) == 0
    assert at(jm_residual(ex.mul(ex.power(X, 2), Y)), x=1, y=1) == 18


def test_kd_residual_example():
    assert at(kd_potential_residual(ex.power(X, 2), 1, 1), x=1) == -12


def test_system_constraint_vanishes_identically():
    W = ex.mul(ex.power(ex.add(X, ex.mul(3, Y)), 4), ex.power(ex.add(2, T, Y), -1))
    _, r2 = kd_system_residual(ex.diff(W, "x"), ex.diff(W, "y"), 1, 1)
    pt = {"t": F(1, 3), "x": F(-2, 7), "y": F(5, 4), "z": F(0)}
    assert ex.evaluate(r2, pt, mode="exact") == 0
    W = ex.mul(ex.sin(ex.mul(X, Y)), ex.exp(T))
    _, r2 = kd_system_residual(ex.diff(W, "x"), ex.diff(W, "y"), 1, 1)
    assert abs(at(r2, t=0.3, x=0.7, y=-1.1)) <= 1e-15
    assert kd_system_residual(ex.ZERO, ex.ZERO, 1, 1) == (ex.ZERO, ex.ZERO)


def test_kd_log_instance_passes():
    field_ = build(random_spec("KD-LX", np.random.default_rng(1), n_max=1))
    rep = verify_field(field_, count=200, seed=0)
    assert rep.passed and max(rep.max_residual.values()) <= 1e-8
    assert rep.max_residual["R2"] <= 1e-10


def test_fd_partial_examples():
    f2 = lambda t, x, y, z: x**2  # noqa: E731
    assert fd_partial(f2, "x", (0, 3, 0, 0), 1e-3) == pytest.approx(6, abs=1e-8)
    fs = lambda t, x, y, z: np.sin(x) * np.sin(y)  # noqa: E731
    assert fd_partial(fs, "xy", (0, math.pi / 6, math.pi / 6, 0)) == pytest.approx(0.75, abs=1e-6)
    f4 = lambda t, x, y, z: x**4  # noqa: E731
    for x0 in (-1.3, 0.0, 2.5):
        assert fd_partial(f4, (0, 4, 0, 0), (0, x0, 0, 0)) == pytest.approx(24, abs=1e-4)


def test_fd_partial_refuses_guarded_region():
    f = lambda t, x, y, z: 1 / x  # noqa: E731
    guard = lambda t, x, y, z: np.abs(x)  # noqa: E731
    with pytest.raises(OracleUnavailableError):
        fd_partial(f, "x", (0, 0.12, 0, 0), 0.05, guard=guard, delta=0.1)
    with pytest.raises(OracleUnavailableError):
        fd_partial(f, "xx", (0, 0.0, 0, 0), 0.01)
    assert fd_partial(f, "x", (0, 0.5, 0, 0), 1e-3, guard=guard) == pytest.approx(-4, rel=1e-6)


def test_sampling_respects_guards():
    pts = sample_domain(DomainSpec(BOX, [Guard(X, "nonzero", "x")], 0.1, 300, 4))
    assert len(pts["x"]) == 300 and np.all(np.abs(pts["x"]) >= 0.1)
    box = dict(BOX, z=(0.0, 1.0), t=(0.4, 0.6))
    g = Guard(ex.add(Z, ex.mul(-2, T)), "nonzero", "z - 2t")
    pts = sample_domain(DomainSpec(box, [g], 0.1, 200, 9))
    assert np.all(np.abs(pts["z"] - 2 * pts["t"]) >= 0.1)


def test_sampling_is_deterministic():
    d = DomainSpec(BOX, [Guard(X, "nonzero", "x")], 0.1, 50, 123)
    a, b = sample_domain(d), sample_domain(d)
    for v in "txyz":
        assert a[v].tolist() == b[v].tolist()


def test_domain_too_singular():
    g = Guard(ex.mul(F(1, 1000), X), "nonzero", "x/1000")
    with pytest.raises(DomainTooSingularError):
        sample_domain(DomainSpec(BOX, [g], 0.1, 10, 0))


def test_normalization_is_scale_invariant():
    W = ex.add(ex.power(X, 3), ex.mul(X, Y, Z))
    terms = jm_terms(W)
    env = {"t": np.array([0.1]), "x": np.array([3.0]), "y": np.array([2.0]), "z": np.array([-1.0])}
    _, n1 = evaluate_terms(terms, env, ex.EMPTY)
    _, n2 = evaluate_terms([ex.mul(1000, t) for t in terms], env, ex.EMPTY)
    # both scales exceed one here, so the ratio is unchanged
    assert n1[0] == pytest.approx(n2[0], rel=1e-12)


def test_exact_path_and_float_path_agree():
    for fam, n in (("JM-L2", None), ("JM-L3", 3), ("KD-LX", 4), ("KD-LY", 2)):
        spec = random_spec(fam, np.random.default_rng(2), n_max=5, polynomial=True)
        field_ = build(spec)
        rep = verify_field(field_, count=60, seed=5)
        assert rep.exact == "zero", fam
        assert max(rep.max_residual.values()) <= 1e-12, fam


def test_exact_path_detects_a_wrong_field():
    terms = jm_terms(ex.mul(ex.power(X, 2), Y))
    env = {v: np.array([0.5, 0.25]) for v in "txyz"}
    assert exact_check(terms, ex.EMPTY, env) == "nonzero"
    assert exact_check(jm_terms(ex.exp(ex.add(X, Y))), ex.EMPTY, env) == "not applicable"


def test_wrong_field_fails_verification():
    field_ = build(random_spec("JM-L2", np.random.default_rng(0)))
    field_.W = ex.add(field_.W, ex.mul(X, X, Y))
    assert not verify_field(field_, count=20, seed=0).passed


@pytest.mark.parametrize("family", FAMILY_IDS)
def test_oracle_agreement(family):
    field_ = build(random_spec(family, np.random.default_rng(17), n_max=4))
    dom = DomainSpec.for_field(field_, count=20, seed=3)
    env = sample_domain(dom, field_.bindings)
    err, used, skipped = fd_crosscheck(field_, env, 20)
    assert used >= 10
    assert err <= 1e-4


def test_plateau_handles_fourth_order():
    f = lambda t, x, y, z: np.exp(x) * np.cos(y)  # noqa: E731
    assert fd_plateau(f, "xxxx", (0, 0.3, 0.2, 0)) == pytest.approx(math.exp(0.3) * math.cos(0.2), rel=1e-6)


def test_report_json_is_sorted_and_stable():
    field_ = build(random_spec("KD-LY", np.random.default_rng(4), n_max=2))
    a = verify_field(field_, count=30, seed=2).to_json()
    b = verify_field(field_, count=30, seed=2).to_json()
    assert a == b and '"max_residual"' in a
    assert set(term_groups(field_)) == {"KD", "R1", "R2"}
