"""Möbius structures: validation, Cotton–York data, invariants, classification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Mapping

import numpy as np

from .geom import ConformalRescale, Metric2D, covariant_derivative, gradient, rescale, tensor
from .symcore import ZERO, Expr, as_expr, is_zero, simplify
from .symcore.canonical import canonical
from .symcore.expr import mark_positive, power
from .symcore.numeric import evaluate
from .symcore.zero import Domain, ZeroVerdict, sample_values

# Weights under g -> Omega^2 g with constant Omega: a representative of weight w
# scales by Omega^w.  mu and phi are left out on purpose; their behaviour is
# measured by `empirical_weight` instead of being assumed.
WEIGHTS: dict[str, int] = {
    "Y": -2,
    "U": -2,
    "V": -6,
    "k": -8,
    "rho": -6,
    "f": -4,
    "eps": 2,
    "sigma": 1,
}


class FlatStructure(ValueError):
    """Requested a quantity that is undefined on flat structures."""


class InvalidStructure(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MobiusStructure:
    g: Metric2D
    P: np.ndarray  # symmetric 2x2 object array of Expr
    domain: Domain = field(default_factory=Domain)
    gauge: str = "g"
    name: str = ""

    @classmethod
    def from_components(
        cls,
        g11,
        g12,
        g22,
        P11,
        P12,
        P22,
        *,
        domain: Domain | None = None,
        coords=("x", "y"),
        positive=(),
        name: str = "",
    ) -> "MobiusStructure":
        prep = [as_expr(c) for c in (g11, g12, g22, P11, P12, P22)]
        if positive:
            prep = [mark_positive(c, positive) for c in prep]
        g = Metric2D(prep[0], prep[1], prep[2], tuple(coords))
        P = tensor(2)
        P[0, 0], P[0, 1], P[1, 0], P[1, 1] = prep[3], prep[4], prep[4], prep[5]
        if domain is None:
            domain = Domain(coords=tuple(coords))
        return cls(g, P, domain, name=name)

    @property
    def coords(self) -> tuple[str, str]:
        return self.g.coords

    @property
    def constants(self) -> dict[str, float]:
        return self.domain.constant_map

    def rescaled(self, omega) -> "MobiusStructure":
        return rescale(self, omega if isinstance(omega, ConformalRescale) else ConformalRescale(as_expr(omega), self.coords))

    @cached_property
    def trace_P(self) -> Expr:
        return self.g.trace(self.P)

    @cached_property
    def cy(self) -> "CottonYork":
        return _cotton_york(self)

    @cached_property
    def inv(self) -> "InvariantSet":
        return _invariants(self)


@dataclass(frozen=True)
class ValidationReport:
    trace: ZeroVerdict
    det: ZeroVerdict
    positive_definite: bool
    trace_residual: str

    @property
    def passed(self) -> bool:
        return self.trace.is_zero and self.det.is_nonzero and self.positive_definite

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "trace_minus_K": self.trace.to_dict(),
            "trace_residual": self.trace_residual,
            "det_g": self.det.to_dict(),
            "positive_definite": self.positive_definite,
        }


def validate(M: MobiusStructure) -> ValidationReport:
    """Check ``g^{ab} P_ab = K`` and non-degeneracy of ``g`` on the domain."""
    resid = simplify(M.trace_P - M.g.gauss_curvature)
    chk = M.g.check(M.domain)
    return ValidationReport(is_zero(resid, M.domain), chk["det"], chk["positive_definite"], str(resid))


@dataclass(frozen=True, eq=False)
class CottonYork:
    Y_abc: np.ndarray
    Y: np.ndarray  # Y_c
    U: np.ndarray  # U_a

    def as_tuple(self):
        return self.Y_abc, self.Y, self.U


def _cotton_york(M: MobiusStructure) -> CottonYork:
    g = M.g
    dP = covariant_derivative(M.P, "ll", g)  # dP[a, b, c] = nabla_a P_bc
    Yabc = tensor(3)
    for a, b, c in itertools.product(range(2), repeat=3):
        Yabc[a, b, c] = simplify(dP[a, b, c] - dP[b, a, c])
    eu, el = g.eps_upper, g.eps_lower
    Y = tensor(1)
    for c in range(2):
        Y[c] = simplify(sum((eu[a, b] * Yabc[a, b, c] for a in range(2) for b in range(2)), ZERO))
    Yup = g.raise_index(Y)
    U = tensor(1)
    for a in range(2):
        U[a] = simplify(sum((el[a, c] * Yup[c] for c in range(2)), ZERO))
    return CottonYork(Yabc, Y, U)


def cotton_york(M: MobiusStructure):
    """``(Y_abc, Y_a, U_a)``."""
    return M.cy.as_tuple()


@dataclass(frozen=True, eq=False)
class InvariantSet:
    Y_abc: np.ndarray
    Y: np.ndarray
    U: np.ndarray
    Y_up: np.ndarray
    U_up: np.ndarray
    mu: Expr
    phi: Expr
    V: np.ndarray
    V_up: np.ndarray
    k: Expr
    rho: Expr
    rho_alt: Expr  # U^a U_a
    UV: Expr
    murho: Expr  # Y^a d_a rho - 6 mu rho
    weights: Mapping[str, int] = field(default_factory=lambda: dict(WEIGHTS))

    def fields(self) -> dict[str, object]:
        return {
            "Y": self.Y,
            "U": self.U,
            "Y_up": self.Y_up,
            "U_up": self.U_up,
            "mu": self.mu,
            "phi": self.phi,
            "V": self.V,
            "V_up": self.V_up,
            "k": self.k,
            "rho": self.rho,
            "UV": self.UV,
        }


def divergence(g: Metric2D, w) -> Expr:
    """``nabla_a w^a`` for a 1-form ``w`` (index raised with ``g``)."""
    return g.trace(covariant_derivative(w, "l", g))


def _invariants(M: MobiusStructure) -> InvariantSet:
    g = M.g
    cy = M.cy
    Y, U = cy.Y, cy.U
    Yup, Uup = g.raise_index(Y), g.raise_index(U)
    mu = simplify(divergence(g, Y) * Fraction(1, 2))
    phi = simplify(divergence(g, U) * Fraction(1, 2))
    dY = covariant_derivative(Y, "l", g)  # dY[e, d] = nabla_e Y_d
    V = tensor(1)
    for d in range(2):
        V[d] = simplify(sum((Uup[e] * dY[e, d] for e in range(2)), ZERO) + mu * U[d] - 3 * phi * Y[d])
    Vup = g.raise_index(V)
    dmu = gradient(g, mu)
    PUY = sum((M.P[e, d] * Uup[e] * Yup[d] for e in range(2) for d in range(2)), ZERO)
    k = simplify(PUY - sum((Uup[e] * dmu[e] for e in range(2)), ZERO) + 3 * phi * mu)
    rho = g.dot(Y, Y)
    rho_alt = g.dot(U, U)
    UV = g.dot(U, V)
    drho = gradient(g, rho)
    murho = simplify(sum((Yup[a] * drho[a] for a in range(2)), ZERO) - 6 * mu * rho)
    return InvariantSet(cy.Y_abc, Y, U, Yup, Uup, mu, phi, V, Vup, k, rho, rho_alt, UV, murho)


def invariants(M: MobiusStructure) -> InvariantSet:
    return M.inv


def f_density(M: MobiusStructure) -> Expr:
    """``f`` with ``V^a = f Y^a``, as ``(V_a Y^a) / rho``.

    Raises :class:`FlatStructure` when ``Y`` vanishes identically and
    :class:`ValueError` when the structure is generic.
    """
    inv = M.inv
    rv = is_zero(inv.rho, M.domain)
    if not rv.is_nonzero:
        raise FlatStructure("f is undefined where Y vanishes")
    uv = is_zero(inv.UV, M.domain)
    if not uv.is_zero:
        raise ValueError("f is only defined when U_a V^a vanishes")
    VY = M.g.dot(inv.V, inv.Y)
    return simplify(VY * power(inv.rho, -1))


@dataclass(frozen=True)
class ClassificationReport:
    label: str  # Flat | Generic | NonGeneric | Mixed
    flat: ZeroVerdict
    nongeneric: ZeroVerdict | None
    sign_witnesses: dict = field(default_factory=dict)
    subdomains: list = field(default_factory=list)

    @property
    def is_flat(self) -> bool:
        return self.label == "Flat"

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "flat": self.label == "Flat",
            "Y_vanishes": self.flat.to_dict(),
            "UV_vanishes": self.nongeneric.to_dict() if self.nongeneric else None,
            "UV_sign_witnesses": self.sign_witnesses,
        }
        if self.subdomains:
            d["subdomains"] = self.subdomains
        return d


def _y_verdict(M: MobiusStructure, domain: Domain) -> ZeroVerdict:
    """``Y ≡ 0`` tested through ``rho = |Y|^2`` and both components."""
    Y = M.inv.Y
    v0, v1 = is_zero(Y[0], domain), is_zero(Y[1], domain)
    if v0.is_zero and v1.is_zero:
        return v0 if v0.kind == ZeroVerdict.NUMERIC else v1
    return v0 if v0.is_nonzero else v1


def _sign_witnesses(e: Expr, domain: Domain, tol: float) -> dict:
    xs, ys, v = sample_values(e, domain)
    out = {}
    if v.size:
        i, j = int(np.argmax(v)), int(np.argmin(v))
        if v[i] > tol:
            out["positive"] = {"point": [float(xs[i]), float(ys[i])], "value": float(v[i])}
        if v[j] < -tol:
            out["negative"] = {"point": [float(xs[j]), float(ys[j])], "value": float(v[j])}
    return out


def classify(M: MobiusStructure) -> ClassificationReport:
    """Flat iff ``Y ≡ 0``; otherwise Generic iff ``U_a V^a`` is not identically
    zero.  Mixed when the verdict is zero on some quadrant of the domain and
    not on another."""
    inv = M.inv
    fv = _y_verdict(M, M.domain)
    if fv.is_zero:
        return ClassificationReport("Flat", fv, None)
    uv = is_zero(inv.UV, M.domain)
    signs = _sign_witnesses(inv.UV, M.domain, uv.tol)
    label = "NonGeneric" if uv.is_zero else "Generic"
    subs = []
    if uv.is_nonzero and not canonical(inv.UV).is_zero:
        kinds = set()
        for q in M.domain.quadrants():
            qv = is_zero(inv.UV, q)
            kinds.add(qv.is_zero)
            subs.append({"bounds": [list(b) for b in q.bounds], "UV_vanishes": qv.to_dict()})
        if len(kinds) > 1:
            label = "Mixed"
        else:
            subs = []
    return ClassificationReport(label, fv, uv, signs, subs)


# ---------------------------------------------------------------- gauge checks


def sampled_ratio(a: Expr, b: Expr, domain: Domain, tol: float = 1e-12):
    """Values of ``a/b`` on samples where ``|b| > tol``."""
    xs, ys = domain.sample_points
    env = domain.env(xs, ys)
    va = np.broadcast_to(evaluate(a, env), xs.shape)
    vb = np.broadcast_to(evaluate(b, env), xs.shape)
    ok = np.isfinite(va) & np.isfinite(vb) & (np.abs(vb) > tol)
    return va[ok] / vb[ok]


def empirical_weight(M: MobiusStructure, name: str, omega: float = 2.0) -> float | None:
    """Measured ``w`` with ``q_hat = Omega^w q`` under a constant rescale.

    Returns None if the quantity vanishes on the samples or the ratio is not
    a constant power of ``omega``."""
    Mh = M.rescaled(as_expr(Fraction(omega).limit_denominator(10**6)))
    a, b = _scalar_of(Mh, name), _scalar_of(M, name)
    r = sampled_ratio(a, b, M.domain)
    if r.size == 0 or not np.all(r > 0):
        return None
    w = np.log(r) / math.log(omega)
    if np.ptp(w) > 1e-8:
        return None
    return float(np.round(np.mean(w), 10))


def k_law_residual(M: MobiusStructure, omega, weight: int = WEIGHTS["k"]) -> Expr:
    """``k_hat - Omega^w (k + g^{cd} Upsilon_c V_d)`` with the unhatted metric and V.

    This form was calibrated against direct two-gauge computation; with
    ``w = -8`` it vanishes identically on the shipped fixtures."""
    r = omega if isinstance(omega, ConformalRescale) else ConformalRescale(as_expr(omega), M.coords)
    Mh = M.rescaled(r)
    yv = M.g.dot(r.upsilon, M.inv.V)
    return simplify(Mh.inv.k - power(r.omega, weight) * (M.inv.k + yv))


def _scalar_of(M: MobiusStructure, name: str) -> Expr:
    inv = M.inv
    if name in ("mu", "phi", "k", "rho", "UV"):
        return getattr(inv, name)
    if name.endswith("_1") or name.endswith("_2"):
        base, idx = name[:-2], int(name[-1]) - 1
        return getattr(inv, base)[idx]
    if name == "f":
        return f_density(M)
    raise KeyError(name)


__all__ = [
    "WEIGHTS",
    "FlatStructure",
    "InvalidStructure",
    "MobiusStructure",
    "ValidationReport",
    "validate",
    "cotton_york",
    "InvariantSet",
    "invariants",
    "divergence",
    "f_density",
    "ClassificationReport",
    "classify",
    "sampled_ratio",
    "empirical_weight",
    "k_law_residual",
]
