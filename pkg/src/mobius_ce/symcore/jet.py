"""Truncated bivariate Taylor expansions (Taylor-mode differentiation).

A :class:`Jet` at base point ``p`` of order ``N`` stores ``c[i, j]``, the
coefficient of ``dx^i dy^j`` for ``i + j <= N``.  Elementary functions are
applied by composing their univariate Taylor series at the base value with
the nilpotent part of the argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy import special
from scipy.signal import convolve2d

from .expr import BUILTIN_CONSTANTS, Add, Expr, Func, Mul, Num, Pow, Sym
from .numeric import real_power

MAX_ORDER = 8


class PoleError(ArithmeticError):
    """The expression is singular (or not real-analytic) at the base point."""


def _mask(n: int) -> np.ndarray:
    i, j = np.indices((n + 1, n + 1))
    return (i + j) <= n


@dataclass(frozen=True, eq=False)
class Jet:
    point: tuple[float, float]
    order: int
    coeffs: np.ndarray  # (order+1, order+1), zero above total degree order

    @classmethod
    def constant(cls, value: float, point, order: int) -> "Jet":
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = value
        return cls(tuple(point), order, c)

    @classmethod
    def variable(cls, index: int, point, order: int) -> "Jet":
        c = np.zeros((order + 1, order + 1))
        c[0, 0] = point[index]
        if order >= 1:
            c[(1, 0) if index == 0 else (0, 1)] = 1.0
        return cls(tuple(point), order, c)

    @property
    def value(self) -> float:
        return float(self.coeffs[0, 0])

    def coeff(self, i: int, j: int = 0) -> float:
        return float(self.coeffs[i, j])

    def derivative(self, i: int, j: int = 0) -> float:
        """``d^(i+j) f / dx^i dy^j`` at the base point."""
        return float(self.coeffs[i, j]) * math.factorial(i) * math.factorial(j)

    def as_dict(self) -> dict[tuple[int, int], float]:
        n = self.order
        return {(i, j): float(self.coeffs[i, j]) for i in range(n + 1) for j in range(n + 1 - i)}

    def _new(self, c: np.ndarray) -> "Jet":
        return Jet(self.point, self.order, c)

    def __add__(self, other: "Jet") -> "Jet":
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other: "Jet") -> "Jet":
        return self._new(self.coeffs - other.coeffs)

    def __neg__(self) -> "Jet":
        return self._new(-self.coeffs)

    def scale(self, s: float) -> "Jet":
        return self._new(self.coeffs * s)

    def __mul__(self, other: "Jet") -> "Jet":
        n = self.order
        c = convolve2d(self.coeffs, other.coeffs)[: n + 1, : n + 1]
        return self._new(np.where(_mask(n), c, 0.0))

    def compose(self, derivs) -> "Jet":
        """``f(self)`` given ``derivs[k] = f^(k)(self.value)`` for ``k <= order``."""
        n = self.order
        h = self.coeffs.copy()
        h[0, 0] = 0.0
        hj = self._new(h)
        out = np.zeros_like(self.coeffs)
        out[0, 0] = derivs[0]
        term = None
        for k in range(1, n + 1):
            term = hj if term is None else term * hj
            out = out + term.coeffs * (derivs[k] / math.factorial(k))
        return self._new(out)


def _falling(r: Fraction, k: int) -> float:
    out = Fraction(1)
    for i in range(k):
        out *= r - i
    return float(out)


def _hermite_phys(n: int, x: float) -> float:
    h0, h1 = 1.0, 2.0 * x
    if n == 0:
        return h0
    for m in range(1, n):
        h0, h1 = h1, 2.0 * x * h1 - 2.0 * m * h0
    return h1


def _airy_derivs(u0: float, which: str, n: int) -> list[float]:
    ai, aip, bi, bip = special.airy(u0)
    y = [ai, aip] if which == "ai" else [bi, bip]
    # y'' = u y  =>  y^(m+2) = u y^(m) + m y^(m-1)
    while len(y) < n + 2:
        m = len(y) - 2
        y.append(u0 * y[m] + (m * y[m - 1] if m >= 1 else 0.0))
    return y


def _func_derivs(name: str, u0: float, n: int) -> list[float]:
    if name == "exp":
        return [math.exp(u0)] * (n + 1)
    if name == "log":
        if u0 <= 0:
            raise PoleError(f"log at non-positive value {u0}")
        return [math.log(u0)] + [(-1) ** (k - 1) * math.factorial(k - 1) / u0**k for k in range(1, n + 1)]
    if name == "sin":
        return [math.sin(u0 + k * math.pi / 2) for k in range(n + 1)]
    if name == "cos":
        return [math.cos(u0 + k * math.pi / 2) for k in range(n + 1)]
    if name == "erf":
        g = 2.0 / math.sqrt(math.pi) * math.exp(-u0 * u0)
        return [math.erf(u0)] + [g * (-1) ** (k - 1) * _hermite_phys(k - 1, u0) for k in range(1, n + 1)]
    if name in ("airy_ai", "airy_bi"):
        return _airy_derivs(u0, name[-2:], n)[: n + 1]
    if name in ("airy_aip", "airy_bip"):
        return _airy_derivs(u0, name[-3:-1], n + 1)[1 : n + 2]
    raise ValueError(name)


def _pow_derivs(u0: float, r: Fraction, n: int) -> list[float]:
    if r.denominator == 1 and r >= 0:
        p = int(r)
        return [_falling(r, k) * u0 ** (p - k) if k <= p else 0.0 for k in range(n + 1)]
    if u0 == 0:
        raise PoleError(f"power {r} at zero base")
    if r.denominator % 2 == 0 and u0 < 0:
        raise PoleError(f"even root of negative value {u0}")
    return [_falling(r, k) * float(real_power(u0, r - k)) for k in range(n + 1)]


def eval_jet(
    e: Expr,
    p,
    order: int,
    *,
    coords: tuple[str, str] = ("x", "y"),
    constants: Mapping[str, float] | None = None,
) -> Jet:
    """Taylor jet of ``e`` at ``p`` up to total degree ``order`` (at most 8)."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}]")
    p = (float(p[0]), float(p[1]))
    constants = dict(constants or {})
    memo: dict[Expr, Jet] = {}

    def go(n: Expr) -> Jet:
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, Num):
            out = Jet.constant(float(n.value), p, order)
        elif isinstance(n, Sym):
            if n.name in coords:
                out = Jet.variable(coords.index(n.name), p, order)
            elif n.name in constants:
                out = Jet.constant(float(constants[n.name]), p, order)
            elif n.name in BUILTIN_CONSTANTS:
                out = Jet.constant(BUILTIN_CONSTANTS[n.name], p, order)
            else:
                raise KeyError(n.name)
        elif isinstance(n, Add):
            out = go(n.terms[0])
            for t in n.terms[1:]:
                out = out + go(t)
        elif isinstance(n, Mul):
            out = go(n.factors[0])
            for f in n.factors[1:]:
                out = out * go(f)
        elif isinstance(n, Pow):
            b = go(n.base)
            out = b.compose(_pow_derivs(b.value, n.exp, order))
        elif isinstance(n, Func):
            a = go(n.arg)
            out = a.compose(_func_derivs(n.name, a.value, order))
        else:
            raise TypeError(type(n))
        memo[n] = out
        return out

    j = go(e)
    if not np.all(np.isfinite(j.coeffs)):
        raise PoleError(f"non-finite jet of {e} at {p}")
    return j
