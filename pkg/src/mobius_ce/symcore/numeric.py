"""Vectorized floating-point evaluation of expression trees."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy import special

from .expr import BUILTIN_CONSTANTS, Add, Expr, Func, Mul, Num, Pow, Sym, free_symbols


class EvaluationError(ArithmeticError):
    """A sample point hit a pole or left the real domain of an expression."""


class UnboundSymbol(KeyError):
    pass


def _airy(idx):
    def f(u):
        return special.airy(u)[idx]

    return f


_FUNCS = {
    "exp": np.exp,
    "log": lambda u: np.log(np.where(u > 0, u, np.nan)),
    "sin": np.sin,
    "cos": np.cos,
    "erf": special.erf,
    "airy_ai": _airy(0),
    "airy_aip": _airy(1),
    "airy_bi": _airy(2),
    "airy_bip": _airy(3),
}


def real_power(b, q):
    """``b**q`` on the reals; odd-denominator roots of negatives are real."""
    b = np.asarray(b, dtype=float)
    p, d = q.numerator, q.denominator
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if d == 1:
            return np.power(b, float(p)) if p < 0 else np.power(b, p)
        mag = np.power(np.abs(b), p / d)
        if d % 2 == 0:
            return np.where(b >= 0, mag, np.nan)
        sign = np.where(b < 0, -1.0 if p % 2 else 1.0, 1.0)
        return sign * mag


def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate ``e`` with symbols bound by ``env`` (scalars or arrays).

    Poles and out-of-domain values come back as ``inf``/``nan``; use
    :func:`evaluate_checked` to turn them into :class:`EvaluationError`.
    """
    memo: dict[Expr, object] = {}

    def go(n: Expr):
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, Num):
            out = float(n.value)
        elif isinstance(n, Sym):
            if n.name in env:
                out = env[n.name]
            elif n.name in BUILTIN_CONSTANTS:
                out = BUILTIN_CONSTANTS[n.name]
            else:
                raise UnboundSymbol(n.name)
        elif isinstance(n, Add):
            out = go(n.terms[0])
            for t in n.terms[1:]:
                out = out + go(t)
        elif isinstance(n, Mul):
            out = go(n.factors[0])
            for f in n.factors[1:]:
                out = out * go(f)
        elif isinstance(n, Pow):
            out = real_power(go(n.base), n.exp)
        elif isinstance(n, Func):
            with np.errstate(all="ignore"):
                out = _FUNCS[n.name](np.asarray(go(n.arg), dtype=float))
        else:
            raise TypeError(type(n))
        memo[n] = out
        return out

    with np.errstate(all="ignore"):
        return np.asarray(go(e), dtype=float)


def evaluate_checked(e: Expr, env: Mapping[str, object]):
    v = evaluate(e, env)
    if not np.all(np.isfinite(v)):
        raise EvaluationError(f"non-finite value of {e} at {dict(env)}")
    return v


def lambdify(e: Expr, names: tuple[str, ...], constants: Mapping[str, float] | None = None):
    """Return ``f(*coords)`` evaluating ``e`` with ``constants`` bound."""
    constants = dict(constants or {})
    missing = free_symbols(e) - set(names) - set(constants) - set(BUILTIN_CONSTANTS)
    if missing:
        raise UnboundSymbol(", ".join(sorted(missing)))

    def f(*args):
        env = dict(constants)
        env.update(zip(names, args))
        return evaluate(e, env)

    return f
