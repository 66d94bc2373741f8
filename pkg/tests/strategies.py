"""Hypothesis strategies: random grammar walks and random expression trees."""

from fractions import Fraction

from hypothesis import strategies as st

from jmkd import expr as ex

SMALL = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def grammar_strings(formals=("s",), max_leaves: int = 12):
    """Random derivations of the body grammar (always well formed)."""
    atoms = st.one_of(
        st.integers(0, 20).map(str),
        st.tuples(st.integers(0, 9), st.integers(1, 99)).map(lambda p: f"{p[0]}.{p[1]}"),
        st.sampled_from(formals),
    )

    def extend(inner):
        exps = st.one_of(st.integers(0, 4).map(str), st.just("-2"), st.just("(1/2)"), st.just("(-3/2)"))
        return st.one_of(
            st.tuples(inner, st.sampled_from(["+", "-", "*"]), inner).map(lambda p: f"{p[0]} {p[1]} {p[2]}"),
            st.tuples(inner, st.sampled_from(["2", "3", "7"])).map(lambda p: f"{p[0]} / {p[1]}"),
            st.tuples(st.sampled_from(["exp", "log", "sin", "cos"]), inner).map(lambda p: f"{p[0]}({p[1]})"),
            inner.map(lambda s: f"({s})"),
            inner.map(lambda s: f"-{s}"),
            st.tuples(st.sampled_from(formals), exps).map(lambda p: f"{p[0]}^{p[1]}"),
            st.tuples(inner, exps).map(lambda p: f"({p[0]})^{p[1]}"),
        )

    return st.recursive(atoms, extend, max_leaves=max_leaves)


def smooth_exprs(variables=("t", "x", "y", "z"), max_leaves: int = 10, antideriv: bool = True):
    """Random trees that are smooth on the box [-1/2, 1/2]^4 (no poles, no logs of small arguments)."""
    leaves = st.one_of(SMALL.map(ex.const), st.sampled_from(variables).map(ex.var))

    def extend(inner):
        options = [
            st.lists(inner, min_size=2, max_size=3).map(lambda xs: ex.add(*xs)),
            st.lists(inner, min_size=2, max_size=3).map(lambda xs: ex.mul(*xs)),
            st.tuples(inner, st.integers(1, 3)).map(lambda p: ex.power(p[0], p[1])),
            inner.map(lambda e: ex.sin(e)),
            inner.map(lambda e: ex.cos(e)),
            inner.map(lambda e: ex.exp(ex.mul(Fraction(1, 4), ex.sin(e)))),
            inner.map(lambda e: ex.power(ex.add(2, ex.sin(e)), Fraction(1, 2))),
            inner.map(lambda e: ex.power(ex.add(3, ex.cos(e)), -1)),
            inner.map(lambda e: ex.log(ex.add(2, ex.sin(e)))),
        ]
        if antideriv:
            options.append(st.tuples(inner, st.sampled_from(variables)).map(
                lambda p: ex.antideriv(p[0], p[1], 0)))
        return st.one_of(*options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def points(lo=-0.5, hi=0.5):
    c = st.floats(lo, hi, allow_nan=False)
    return st.tuples(c, c, c, c).map(lambda p: ex.Point4(*p))
