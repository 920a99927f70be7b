"""Exact partial derivatives."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .expr import ONE, ZERO, Add, Expr, Func, Mul, Num, Pow, Sym, add, depends_on, func, mul, power

SQRT_PI = Sym("sqrt_pi", positive=True)


@lru_cache(maxsize=65536)
def _d(e: Expr, v: str) -> Expr:
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == v else ZERO
    if not depends_on(e, v):
        return ZERO
    if isinstance(e, Add):
        return add(*[_d(t, v) for t in e.terms])
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = _d(f, v)
            if df != ZERO:
                terms.append(mul(*fs[:i], df, *fs[i + 1 :]))
        return add(*terms)
    if isinstance(e, Pow):
        db = _d(e.base, v)
        return mul(Num(e.exp), power(e.base, e.exp - 1), db)
    if isinstance(e, Func):
        u = e.arg
        du = _d(u, v)
        name = e.name
        if name == "exp":
            outer = e
        elif name == "log":
            outer = power(u, -1)
        elif name == "sin":
            outer = func("cos", u)
        elif name == "cos":
            outer = mul(Num(-1), func("sin", u))
        elif name == "erf":
            outer = mul(Num(2), power(SQRT_PI, -1), func("exp", mul(Num(-1), power(u, 2))))
        elif name == "airy_ai":
            outer = func("airy_aip", u)
        elif name == "airy_bi":
            outer = func("airy_bip", u)
        elif name == "airy_aip":
            # Ai'' = t Ai
            outer = mul(u, func("airy_ai", u))
        elif name == "airy_bip":
            outer = mul(u, func("airy_bi", u))
        else:  # pragma: no cover - sqrt is rewritten to a power at construction
            raise ValueError(name)
        return mul(outer, du)
    raise TypeError(type(e))


def differentiate(e: Expr, v: str, *, simplify: bool = True) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol named ``v``.

    The result is passed through the canonical normal form unless
    ``simplify`` is false.
    """
    d = _d(e, v)
    if simplify:
        from .canonical import simplify as _simplify

        return _simplify(d)
    return d


def derivative(e: Expr, *vars: str, simplify: bool = True) -> Expr:
    for v in vars:
        e = differentiate(e, v, simplify=simplify)
    return e
