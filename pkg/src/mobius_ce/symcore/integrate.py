"""Symbolic antiderivatives for the term shapes that occur in practice,
plus exact potentials of closed 1-forms and a numeric path-integral fallback."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from scipy.integrate import quad

from .canonical import canonical, equal, simplify
from .diff import differentiate
from .expr import ZERO, Add, Expr, Func, Mul, Num, Pow, Sym, add, depends_on, func, mul, power, substitute
from .numeric import evaluate


def _integrate_term(t: Expr, v: str) -> Expr | None:
    factors = t.factors if isinstance(t, Mul) else (t,)
    n = Fraction(0)
    vsym = None
    exp_args: list[Expr] = []
    rest: list[Expr] = []
    for f in factors:
        if not depends_on(f, v):
            rest.append(f)
        elif isinstance(f, Sym):
            n += 1
            vsym = f
        elif isinstance(f, Pow) and isinstance(f.base, Sym):
            n += f.exp
            vsym = f.base
        elif isinstance(f, Func) and f.name == "exp":
            exp_args.append(f.arg)
        else:
            return None
    c = mul(*rest)
    if exp_args:
        if n != 0:
            return None
        arg = add(*exp_args)
        slope = differentiate(arg, v)
        if slope == ZERO or depends_on(slope, v):
            return None
        return mul(c, func("exp", arg), power(slope, -1))
    if vsym is None:
        return mul(c, Sym(v))
    if n == -1:
        if not vsym.positive:
            return None
        return mul(c, func("log", vsym))
    return mul(c, Num(1 / (n + 1)), power(vsym, n + 1))


def antiderivative(e: Expr, v: str) -> Expr | None:
    """An exact antiderivative of ``e`` in ``v``, or None when the simple
    term-wise rules do not apply.  The result is checked by differentiation."""
    s = simplify(e)
    if s == ZERO:
        return ZERO
    c = canonical(s)
    den = c.poly_to_expr(c.den)
    if depends_on(den, v):
        return None
    num = c.poly_to_expr(c.num)
    terms = num.terms if isinstance(num, Add) else (num,)
    pieces = []
    for t in terms:
        it = _integrate_term(t, v)
        if it is None:
            return None
        pieces.append(it)
    out = simplify(mul(add(*pieces), power(den, -1)))
    if not equal(differentiate(out, v), s):
        return None
    return out


def potential(omega: tuple[Expr, Expr], coords: tuple[str, str] = ("x", "y")) -> Expr | None:
    """``F`` with ``dF = omega`` exactly, or None if no exact potential is found."""
    x, y = coords
    F1 = antiderivative(omega[0], x)
    if F1 is None:
        return None
    r = simplify(omega[1] - differentiate(F1, y))
    if depends_on(r, x) and not canonical(differentiate(r, x)).is_zero:
        return None
    F2 = antiderivative(r, y)
    if F2 is None:
        return None
    F = simplify(F1 + F2)
    if not (equal(differentiate(F, x), omega[0]) and equal(differentiate(F, y), omega[1])):
        return None
    return F


def numeric_line_integral(
    omega: tuple[Expr, Expr],
    base: tuple[float, float],
    point: tuple[float, float],
    *,
    coords: tuple[str, str] = ("x", "y"),
    constants: Mapping[str, float] | None = None,
    order: str = "xy",
) -> float:
    """Integral of ``omega`` along the axis-aligned L-path from ``base`` to
    ``point``; ``order='xy'`` moves in x first, ``'yx'`` in y first."""
    env0 = dict(constants or {})
    (x0, y0), (x1, y1) = base, point

    def comp(k, xv, yv):
        env = dict(env0)
        env[coords[0]] = xv
        env[coords[1]] = yv
        return float(evaluate(omega[k], env))

    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
    if order == "xy":
        a = quad(lambda t: comp(0, t, y0), x0, x1, **opts)[0]
        b = quad(lambda t: comp(1, x1, t), y0, y1, **opts)[0]
    else:
        a = quad(lambda t: comp(1, x0, t), y0, y1, **opts)[0]
        b = quad(lambda t: comp(0, t, y1), x0, x1, **opts)[0]
    return a + b


def evaluate_at(e: Expr, point: Mapping[str, float]) -> float:
    return float(evaluate(e, dict(point)))


def substitute_point(e: Expr, values: Mapping[str, Fraction]) -> Expr:
    return simplify(substitute(e, {k: Num(Fraction(v)) for k, v in values.items()}))


__all__ = ["antiderivative", "potential", "numeric_line_integral", "evaluate_at", "substitute_point"]
