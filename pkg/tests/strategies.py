"""Hypothesis generators for expressions and structures."""

from fractions import Fraction

from hypothesis import strategies as st

from mobius_ce.symcore import Num, Sym, add, func, mul, power

X, Y = Sym("x"), Sym("y")

small_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=4)
leaves = st.one_of(st.sampled_from([X, Y]), small_rationals.map(Num))


def _extend(children, funcs: bool):
    ops = [
        st.lists(children, min_size=2, max_size=3).map(lambda ts: add(*ts)),
        st.lists(children, min_size=2, max_size=3).map(lambda fs: mul(*fs)),
        st.tuples(children, st.integers(min_value=2, max_value=3)).map(lambda t: power(t[0], t[1])),
    ]
    if funcs:
        ops.append(st.tuples(st.sampled_from(["exp", "sin", "cos"]), children).map(lambda t: func(*t)))
    return st.one_of(*ops)


polynomials = st.recursive(leaves, lambda c: _extend(c, False), max_leaves=8)
small_polynomials = st.recursive(leaves, lambda c: _extend(c, False), max_leaves=4)
smooth = st.recursive(leaves, lambda c: _extend(c, True), max_leaves=8)


@st.composite
def rationals(draw):
    """Quotients ``p / (1 + q^2)`` that are regular everywhere."""
    p = draw(small_polynomials)
    q = draw(small_polynomials)
    return mul(p, power(add(Num(1), power(q, 2)), -1))


points = st.tuples(
    st.fractions(min_value=-1, max_value=1, max_denominator=8),
    st.fractions(min_value=-1, max_value=1, max_denominator=8),
)


@st.composite
def flat_rho(draw, small: bool = False):
    """A trace-free polynomial Rho tensor on the flat plane (so trace P = K = 0)."""
    src = small_polynomials if small else polynomials
    a = draw(src)
    b = draw(src)
    return a, b, mul(Num(-1), a)


def frac(v) -> Fraction:
    return Fraction(v)
