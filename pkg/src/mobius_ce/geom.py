"""Riemannian geometry of a two-dimensional metric in explicit coordinates.

Tensors are dense ``numpy`` object arrays of :class:`Expr` with shape
``(2,) * rank``.  Index convention for the Christoffel symbols:
``gamma[a, b, c]`` is the coefficient with ``a`` raised.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property

import numpy as np

from .symcore import ONE, ZERO, Expr, as_expr, differentiate, is_zero, simplify
from .symcore.canonical import canonical
from .symcore.expr import power
from .symcore.zero import Domain, sample_values


class DegenerateMetric(ValueError):
    pass


class NonPositiveOmega(ValueError):
    pass


def tensor(shape_rank: int) -> np.ndarray:
    a = np.empty((2,) * shape_rank, dtype=object)
    a.fill(ZERO)
    return a


def simplify_all(t: np.ndarray) -> np.ndarray:
    out = np.empty(t.shape, dtype=object)
    for idx in itertools.product(range(2), repeat=t.ndim):
        out[idx] = simplify(t[idx])
    return out


def is_exact_zero_tensor(t: np.ndarray) -> bool:
    return all(canonical(t[idx]).is_zero for idx in itertools.product(range(2), repeat=t.ndim))


@dataclass(frozen=True, eq=False)
class Metric2D:
    g11: Expr
    g12: Expr
    g22: Expr
    coords: tuple[str, str] = ("x", "y")

    @classmethod
    def flat(cls, coords=("x", "y")) -> "Metric2D":
        return cls(ONE, ZERO, ONE, tuple(coords))

    @classmethod
    def conformally_flat(cls, factor: Expr, coords=("x", "y")) -> "Metric2D":
        """``factor * delta``."""
        return cls(as_expr(factor), ZERO, as_expr(factor), tuple(coords))

    @cached_property
    def components(self) -> np.ndarray:
        g = tensor(2)
        g[0, 0], g[0, 1], g[1, 0], g[1, 1] = self.g11, self.g12, self.g12, self.g22
        return g

    @cached_property
    def det(self) -> Expr:
        d = simplify(self.g11 * self.g22 - self.g12 * self.g12)
        if canonical(d).is_zero:
            raise DegenerateMetric("det g vanishes identically")
        return d

    @cached_property
    def inverse(self) -> np.ndarray:
        inv_det = power(self.det, -1)
        gi = tensor(2)
        gi[0, 0] = simplify(self.g22 * inv_det)
        gi[1, 1] = simplify(self.g11 * inv_det)
        gi[0, 1] = gi[1, 0] = simplify(-self.g12 * inv_det)
        return gi

    @cached_property
    def sqrt_det(self) -> Expr:
        return simplify(power(self.det, Fraction(1, 2)))

    @cached_property
    def eps_lower(self) -> np.ndarray:
        """Volume form with the orientation ``eps_12 = +sqrt(det g)``."""
        e = tensor(2)
        e[0, 1] = self.sqrt_det
        e[1, 0] = simplify(-self.sqrt_det)
        return e

    @cached_property
    def eps_upper(self) -> np.ndarray:
        e = tensor(2)
        inv = simplify(power(self.sqrt_det, -1))
        e[0, 1] = inv
        e[1, 0] = simplify(-inv)
        return e

    def d(self, e: Expr, a: int) -> Expr:
        return differentiate(e, self.coords[a])

    @cached_property
    def christoffel(self) -> np.ndarray:
        g, gi = self.components, self.inverse
        dg = tensor(3)  # dg[c, a, b] = d_c g_ab
        for c, a, b in itertools.product(range(2), repeat=3):
            dg[c, a, b] = self.d(g[a, b], c)
        gam = tensor(3)
        for a, b, c in itertools.product(range(2), repeat=3):
            s = ZERO
            for d in range(2):
                s = s + gi[a, d] * (dg[b, d, c] + dg[c, d, b] - dg[d, b, c])
            gam[a, b, c] = simplify(s * Fraction(1, 2))
        return gam

    @cached_property
    def riemann(self) -> np.ndarray:
        """``R[a, b, c, d]`` with the first index lowered; ``R_1212 = K det g``."""
        G = self.christoffel
        up = tensor(4)  # R^a_bcd
        for a, b, c, d in itertools.product(range(2), repeat=4):
            s = self.d(G[a, d, b], c) - self.d(G[a, c, b], d)
            for e in range(2):
                s = s + G[a, c, e] * G[e, d, b] - G[a, d, e] * G[e, c, b]
            up[a, b, c, d] = s
        g = self.components
        low = tensor(4)
        for a, b, c, d in itertools.product(range(2), repeat=4):
            low[a, b, c, d] = simplify(sum((g[a, e] * up[e, b, c, d] for e in range(2)), ZERO))
        return low

    @cached_property
    def ricci(self) -> np.ndarray:
        R = self.riemann
        gi = self.inverse
        ric = tensor(2)
        for b, d in itertools.product(range(2), repeat=2):
            s = ZERO
            for a, e in itertools.product(range(2), repeat=2):
                s = s + gi[a, e] * R[e, b, a, d]
            ric[b, d] = simplify(s)
        return ric

    @cached_property
    def scalar_curvature(self) -> Expr:
        gi, ric = self.inverse, self.ricci
        return simplify(sum((gi[a, b] * ric[a, b] for a in range(2) for b in range(2)), ZERO))

    @cached_property
    def gauss_curvature(self) -> Expr:
        return simplify(self.scalar_curvature * Fraction(1, 2))

    def riemann_from_curvature(self) -> np.ndarray:
        """``K (g_ac g_bd - g_ad g_bc)``."""
        g, K = self.components, self.gauss_curvature
        out = tensor(4)
        for a, b, c, d in itertools.product(range(2), repeat=4):
            out[a, b, c, d] = simplify(K * (g[a, c] * g[b, d] - g[a, d] * g[b, c]))
        return out

    # index gymnastics on 1-forms / vectors
    def raise_index(self, w) -> np.ndarray:
        gi = self.inverse
        out = tensor(1)
        for a in range(2):
            out[a] = simplify(gi[a, 0] * w[0] + gi[a, 1] * w[1])
        return out

    def lower_index(self, v) -> np.ndarray:
        g = self.components
        out = tensor(1)
        for a in range(2):
            out[a] = simplify(g[a, 0] * v[0] + g[a, 1] * v[1])
        return out

    def dot(self, u, v, *, lower: bool = True) -> Expr:
        """``g^{ab} u_a v_b`` for 1-forms (``lower=True``) or ``g_ab u^a v^b``."""
        m = self.inverse if lower else self.components
        return simplify(sum((m[a, b] * u[a] * v[b] for a in range(2) for b in range(2)), ZERO))

    def trace(self, t) -> Expr:
        """``g^{ab} t_ab``."""
        gi = self.inverse
        return simplify(sum((gi[a, b] * t[a, b] for a in range(2) for b in range(2)), ZERO))

    def laplacian(self, s: Expr) -> Expr:
        return self.trace(covariant_derivative(gradient(self, s), "l", self))

    def check(self, domain: Domain) -> dict:
        """Sampled non-degeneracy and positive-definiteness."""
        det_v = is_zero(self.det, domain)
        _, _, d = sample_values(self.det, domain)
        _, _, g11 = sample_values(self.g11, domain)
        positive = bool(d.size and g11.size and (d > 0).all() and (g11 > 0).all())
        return {"det": det_v, "positive_definite": positive}


def gradient(g: Metric2D, s: Expr) -> np.ndarray:
    out = tensor(1)
    for a in range(2):
        out[a] = g.d(s, a)
    return out


def covariant_derivative(T, variance: str, g: Metric2D) -> np.ndarray:
    """``nabla T`` for a tensor whose indices are typed by ``variance``
    (``'l'`` lower, ``'u'`` upper).  The derivative index comes first."""
    T = np.asarray(T, dtype=object) if not isinstance(T, Expr) else T
    G = g.christoffel
    if isinstance(T, Expr) or getattr(T, "ndim", 0) == 0:
        s = T if isinstance(T, Expr) else T.item()
        return gradient(g, s)
    rank = T.ndim
    if len(variance) != rank:
        raise ValueError(f"variance {variance!r} does not match rank {rank}")
    out = tensor(rank + 1)
    for idx in itertools.product(range(2), repeat=rank + 1):
        a, rest = idx[0], idx[1:]
        s = g.d(T[rest], a)
        for pos, kind in enumerate(variance):
            for k in range(2):
                swapped = rest[:pos] + (k,) + rest[pos + 1 :]
                if kind == "u":
                    s = s + G[rest[pos], a, k] * T[swapped]
                else:
                    s = s - G[k, a, rest[pos]] * T[swapped]
        out[idx] = simplify(s)
    return out


@dataclass(frozen=True, eq=False)
class ConformalRescale:
    """``g -> Omega^2 g`` with ``Upsilon_a = d_a log Omega``."""

    omega: Expr
    coords: tuple[str, str] = ("x", "y")

    @cached_property
    def upsilon(self) -> np.ndarray:
        u = tensor(1)
        for a in range(2):
            u[a] = simplify(differentiate(self.omega, self.coords[a]) * power(self.omega, -1))
        return u

    @property
    def is_constant(self) -> bool:
        return all(canonical(u).is_zero for u in self.upsilon)

    def check_positive(self, domain: Domain) -> None:
        _, _, v = sample_values(self.omega, domain)
        if v.size == 0 or not (v > 0).all():
            raise NonPositiveOmega(f"Omega = {self.omega} is not positive on the domain")

    def metric(self, g: Metric2D) -> Metric2D:
        w = power(self.omega, 2)
        return Metric2D(simplify(w * g.g11), simplify(w * g.g12), simplify(w * g.g22), g.coords)

    def rho(self, g: Metric2D, P: np.ndarray) -> np.ndarray:
        """``P - nabla Y + Y Y - 1/2 g |Y|^2`` for ``Y = Upsilon``."""
        Y = self.upsilon
        dY = covariant_derivative(Y, "l", g)
        y2 = g.dot(Y, Y)
        gc = g.components
        out = tensor(2)
        for a, b in itertools.product(range(2), repeat=2):
            out[a, b] = simplify(P[a, b] - dY[a, b] + Y[a] * Y[b] - gc[a, b] * y2 * Fraction(1, 2))
        return out


def rescale(M, r: ConformalRescale, *, check: bool = True):
    """Rescaled copy of a structure carrying ``g`` (:class:`Metric2D`), ``P``
    (2x2 object array) and ``domain`` attributes."""
    if isinstance(r, Expr) or not isinstance(r, ConformalRescale):
        r = ConformalRescale(as_expr(r), M.g.coords)
    if check:
        r.check_positive(M.domain)
    g_hat = r.metric(M.g)
    P_hat = r.rho(M.g, M.P)
    return replace(M, g=g_hat, P=P_hat, gauge=_gauge_name(M, r))


def _gauge_name(M, r: ConformalRescale) -> str:
    base = getattr(M, "gauge", "g")
    return f"{base}*({r.omega})^2"


__all__ = [
    "DegenerateMetric",
    "NonPositiveOmega",
    "Metric2D",
    "ConformalRescale",
    "covariant_derivative",
    "gradient",
    "rescale",
    "tensor",
    "simplify_all",
    "is_exact_zero_tensor",
]
