"""Independent evaluators used as test oracles."""

from fractions import Fraction

import mpmath

from mobius_ce.symcore.expr import Add, Func, Mul, Num, Pow, Sym

mpmath.mp.dps = 40


def exact_value(e, env):
    """Exact evaluation with Fractions; rational expressions only."""
    if isinstance(e, Num):
        return Fraction(e.value)
    if isinstance(e, Sym):
        return Fraction(env[e.name])
    if isinstance(e, Add):
        return sum((exact_value(t, env) for t in e.terms), Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for f in e.factors:
            out *= exact_value(f, env)
        return out
    if isinstance(e, Pow):
        if e.exp.denominator != 1:
            raise ValueError("fractional power")
        return exact_value(e.base, env) ** int(e.exp)
    raise ValueError(f"not rational: {e}")


_MP = {
    "exp": mpmath.exp,
    "log": mpmath.log,
    "sin": mpmath.sin,
    "cos": mpmath.cos,
    "erf": mpmath.erf,
    "airy_ai": mpmath.airyai,
    "airy_bi": mpmath.airybi,
    "airy_aip": lambda z: mpmath.airyai(z, derivative=1),
    "airy_bip": lambda z: mpmath.airybi(z, derivative=1),
}
_CONST = {"pi": mpmath.pi, "sqrt_pi": mpmath.sqrt(mpmath.pi)}


def mp_value(e, env):
    """High-precision evaluation through mpmath."""
    if isinstance(e, Num):
        return mpmath.mpf(e.value.numerator) / e.value.denominator
    if isinstance(e, Sym):
        if e.name in env:
            v = Fraction(env[e.name])
            return mpmath.mpf(v.numerator) / v.denominator
        return _CONST[e.name]
    if isinstance(e, Add):
        return mpmath.fsum(mp_value(t, env) for t in e.terms)
    if isinstance(e, Mul):
        return mpmath.fprod(mp_value(f, env) for f in e.factors)
    if isinstance(e, Pow):
        b = mp_value(e.base, env)
        q = e.exp
        if q.denominator % 2 == 1 and b < 0:
            return (-1) ** q.numerator * mpmath.root(-b, q.denominator) ** q.numerator
        return b ** (mpmath.mpf(q.numerator) / q.denominator)
    if isinstance(e, Func):
        return _MP[e.name](mp_value(e.arg, env))
    raise TypeError(type(e))
