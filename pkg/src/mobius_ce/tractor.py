"""Rank-4 tractor bundle in a fixed splitting ``(sigma, mu_1, mu_2, Lambda)``.

Connections (derivative index ``a``)::

    standard:      (∇_a σ - μ_a,  ∇_a μ_b + P_ab σ + Λ g_ab,  ∇_a Λ - P_a^d μ_d)
    prolongation:  standard + (0, 0, ½ U_a σ)

Tractor metric: ``h(S, T) = σ_S Λ_T + σ_T Λ_S + g^{ab} μ_S,a μ_T,b``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geom import ConformalRescale, covariant_derivative, gradient, tensor
from .mobius import MobiusStructure
from .symcore import ZERO, Expr, Num, Sym, as_expr, differentiate, parse_expr, simplify
from .symcore.canonical import canonical
from .symcore.expr import free_symbols, power
from .symcore.numeric import evaluate


class GaugeMismatch(ValueError):
    pass


class DomainExit(ValueError):
    pass


class StepLimitExceeded(RuntimeError):
    pass


class ConnectionKind(enum.Enum):
    STANDARD = "standard"
    PROLONGATION = "prolongation"

    @classmethod
    def parse(cls, s) -> "ConnectionKind":
        if isinstance(s, cls):
            return s
        return cls(str(s).lower())


@dataclass(frozen=True, eq=False)
class TractorSection:
    sigma: object
    mu1: object
    mu2: object
    Lambda: object
    gauge: str = "g"

    @property
    def mu(self) -> tuple:
        return (self.mu1, self.mu2)

    def components(self) -> tuple:
        return (self.sigma, self.mu1, self.mu2, self.Lambda)

    @property
    def is_symbolic(self) -> bool:
        return all(isinstance(c, Expr) for c in self.components())

    def at(self, M: MobiusStructure, x: float, y: float) -> np.ndarray:
        env = M.domain.env(x, y)
        return np.array([float(evaluate(as_expr(c), env)) for c in self.components()])

    def to_dict(self) -> dict:
        def show(c):
            return str(c) if isinstance(c, Expr) else float(c)

        return {
            "sigma": show(self.sigma),
            "mu": [show(self.mu1), show(self.mu2)],
            "Lambda": show(self.Lambda),
            "gauge": self.gauge,
        }


def tractor_from_scale(M: MobiusStructure, sigma) -> TractorSection:
    """``(σ, ∇_a σ, -½(Δσ + Kσ))``."""
    sigma = simplify(as_expr(sigma))
    d = gradient(M.g, sigma)
    lam = simplify(Fraction(-1, 2) * (M.g.laplacian(sigma) + M.g.gauss_curvature * sigma))
    return TractorSection(sigma, d[0], d[1], lam, M.gauge)


@dataclass(frozen=True, eq=False)
class TractorDerivative:
    """``∇_a T``: ``top[a]``, ``middle[a, b]``, ``bottom[a]``."""

    top: np.ndarray
    middle: np.ndarray
    bottom: np.ndarray

    def slot(self, a: int) -> tuple:
        """The tractor ``∇_a T`` as ``(σ, μ_1, μ_2, Λ)`` components."""
        return (self.top[a], self.middle[a, 0], self.middle[a, 1], self.bottom[a])

    def exprs(self):
        return [self.top[0], self.top[1], *self.middle.ravel(), self.bottom[0], self.bottom[1]]

    def is_exact_zero(self) -> bool:
        return all(canonical(e).is_zero for e in self.exprs())


def apply_connection(M: MobiusStructure, kind, T: TractorSection) -> TractorDerivative:
    kind = ConnectionKind.parse(kind)
    g = M.g
    sigma, mu, lam = as_expr(T.sigma), [as_expr(T.mu1), as_expr(T.mu2)], as_expr(T.Lambda)
    ds = gradient(g, sigma)
    dmu = covariant_derivative(np.array(mu, dtype=object), "l", g)
    dl = gradient(g, lam)
    P, gc = M.P, g.components
    Pmix = _mixed(M)  # P_a^d
    top, bottom = tensor(1), tensor(1)
    mid = tensor(2)
    U = M.inv.U if kind is ConnectionKind.PROLONGATION else None
    for a in range(2):
        top[a] = simplify(ds[a] - mu[a])
        b_ = dl[a] - sum((Pmix[a, d] * mu[d] for d in range(2)), ZERO)
        if U is not None:
            b_ = b_ + Fraction(1, 2) * U[a] * sigma
        bottom[a] = simplify(b_)
        for b in range(2):
            mid[a, b] = simplify(dmu[a, b] + P[a, b] * sigma + lam * gc[a, b])
    return TractorDerivative(top, mid, bottom)


def _mixed(M: MobiusStructure) -> np.ndarray:
    gi = M.g.inverse
    out = tensor(2)
    for a, d in itertools.product(range(2), repeat=2):
        out[a, d] = simplify(sum((gi[d, e] * M.P[a, e] for e in range(2)), ZERO))
    return out


def tractor_metric(M: MobiusStructure, S, T) -> Expr:
    """``h(S, T)`` for sections given as :class:`TractorSection` or 4-tuples."""
    s = S.components() if isinstance(S, TractorSection) else tuple(S)
    t = T.components() if isinstance(T, TractorSection) else tuple(T)
    s = [as_expr(c) for c in s]
    t = [as_expr(c) for c in t]
    return simplify(s[0] * t[3] + t[0] * s[3] + M.g.dot((s[1], s[2]), (t[1], t[2])))


def metric_compatibility_defect(M: MobiusStructure, T: TractorSection, kind="standard") -> list[Expr]:
    """``∂_a h(T, T) - 2 h(∇_a T, T)`` for ``a = 1, 2``."""
    D = apply_connection(M, kind, T)
    hTT = tractor_metric(M, T, T)
    out = []
    for a in range(2):
        out.append(simplify(differentiate(hTT, M.coords[a]) - 2 * tractor_metric(M, D.slot(a), T)))
    return out


def constraint_residuals(M: MobiusStructure, T: TractorSection):
    """``(Y_a μ^a + μ σ, V_d μ^d - k σ)``."""
    inv = M.inv
    g = M.g
    sigma = as_expr(T.sigma)
    mu = (as_expr(T.mu1), as_expr(T.mu2))
    r1 = simplify(g.dot(inv.Y, mu) + inv.mu * sigma)
    r2 = simplify(g.dot(inv.V, mu) - inv.k * sigma)
    return r1, r2


def rescale_section(T: TractorSection, r: ConformalRescale, M: MobiusStructure, *, point=None) -> TractorSection:
    """Components in the gauge ``Omega^2 g``.

    With ``Upsilon = d log Omega`` and indices raised by ``g``::

        σ^ = Ω σ,  μ^_b = Ω (μ_b + Υ_b σ),  Λ^ = Ω^-1 (Λ - Υ^b μ_b - ½ Υ_b Υ^b σ)

    The bracketed parts are the splitting change; the powers of Omega carry
    the conformal weights of the slots in the chosen coordinates.
    """
    if T.gauge != M.gauge:
        raise GaugeMismatch(f"section is in gauge {T.gauge!r}, structure in {M.gauge!r}")
    if not isinstance(r, ConformalRescale):
        r = ConformalRescale(as_expr(r), M.coords)
    Y = r.upsilon
    Om = r.omega
    g = M.g
    target = f"{M.gauge}*({Om})^2"
    if T.is_symbolic:
        s, m1, m2, lam = T.components()
        mh = [simplify(Om * (m + Y[b] * s)) for b, m in enumerate((m1, m2))]
        Yup = g.raise_index(Y)
        lh = simplify(power(Om, -1) * (lam - Yup[0] * m1 - Yup[1] * m2 - Fraction(1, 2) * g.dot(Y, Y) * s))
        return TractorSection(simplify(Om * s), mh[0], mh[1], lh, target)
    if point is None:
        raise ValueError("numeric sections need the evaluation point")
    env = M.domain.env(float(point[0]), float(point[1]))
    om = float(evaluate(Om, env))
    y = np.array([float(evaluate(c, env)) for c in Y])
    gi = np.array([[float(evaluate(g.inverse[i, j], env)) for j in range(2)] for i in range(2)])
    s, m1, m2, lam = (float(c) for c in T.components())
    mu = np.array([m1, m2])
    yup = gi @ y
    mh = om * (mu + y * s)
    lh = (lam - yup @ mu - 0.5 * (y @ yup) * s) / om
    return TractorSection(om * s, float(mh[0]), float(mh[1]), float(lh), target)


# ---------------------------------------------------------------- curves and transport


@dataclass(frozen=True, eq=False)
class Curve:
    """A path ``t -> (x(t), y(t))``, ``t in [0, 1]``, or a polyline."""

    x: Expr | None = None
    y: Expr | None = None
    param: str = "t"
    points: tuple[tuple[float, float], ...] | None = None

    @classmethod
    def parametric(cls, x, y, param: str = "t") -> "Curve":
        return cls(as_expr(x), as_expr(y), param)

    @classmethod
    def polyline(cls, points: Sequence[Sequence[float]]) -> "Curve":
        pts = tuple((float(p[0]), float(p[1])) for p in points)
        if len(pts) < 2:
            raise ValueError("a polyline needs at least two points")
        return cls(points=pts)

    @classmethod
    def parse(cls, spec: str) -> "Curve":
        """``"x(t); y(t)"`` or ``"poly: x0,y0; x1,y1; ..."``."""
        spec = spec.strip()
        if spec.startswith("poly:"):
            pts = [tuple(float(v) for v in chunk.split(",")) for chunk in spec[5:].split(";") if chunk.strip()]
            return cls.polyline(pts)
        parts = [p for p in spec.split(";")]
        if len(parts) != 2:
            raise ValueError("curve spec must be 'x(t); y(t)' or 'poly: x0,y0; x1,y1; ...'")
        return cls.parametric(parse_expr(parts[0]), parse_expr(parts[1]))

    def segments(self) -> list["Curve"]:
        if self.points is None:
            return [self]
        out = []
        t = Sym(self.param)
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            fx0, fx1 = Fraction(x0).limit_denominator(10**9), Fraction(x1).limit_denominator(10**9)
            fy0, fy1 = Fraction(y0).limit_denominator(10**9), Fraction(y1).limit_denominator(10**9)
            out.append(Curve(Num(fx0) + Num(fx1 - fx0) * t, Num(fy0) + Num(fy1 - fy0) * t, self.param))
        return out

    def velocity(self) -> tuple[Expr, Expr]:
        return differentiate(self.x, self.param), differentiate(self.y, self.param)

    def evaluate(self, ts, constants=None):
        env = dict(constants or {})
        env[self.param] = ts
        vx, vy = self.velocity()
        sh = np.shape(ts)
        return tuple(np.broadcast_to(evaluate(e, env), sh).astype(float) for e in (self.x, self.y, vx, vy))

    def to_dict(self) -> dict:
        if self.points is not None:
            return {"polyline": [list(p) for p in self.points]}
        return {"x": str(self.x), "y": str(self.y), "param": self.param}


@dataclass
class TransportResult:
    endpoint: np.ndarray
    trajectory: list  # rows (t, x, y, sigma, mu1, mu2, Lambda)
    steps: int
    last_change: float
    order_estimate: float | None
    changes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint.tolist(),
            "steps": self.steps,
            "halving_change": self.last_change,
            "order_estimate": self.order_estimate,
            "refinement": self.changes,
            "trajectory": self.trajectory,
        }


class _Coefficients:
    """Vectorized connection matrices ``C_a`` with ``∂_a T = C_a T`` for parallel ``T``."""

    def __init__(self, M: MobiusStructure, kind: ConnectionKind):
        g = M.g
        G = g.christoffel
        self.M = M
        self.G = G
        self.P = M.P
        self.gc = g.components
        self.Pm = _mixed(M)
        self.U = M.inv.U if kind is ConnectionKind.PROLONGATION else None

    def matrices(self, xs, ys) -> np.ndarray:
        """Shape ``(2, n, 4, 4)``."""
        env = self.M.domain.env(xs, ys)
        n = xs.shape[0]

        def ev(e):
            return np.broadcast_to(evaluate(e, env), (n,)).astype(float)

        C = np.zeros((2, n, 4, 4))
        for a in range(2):
            C[a, :, 0, 1 + a] = 1.0
            for b in range(2):
                C[a, :, 1 + b, 0] = -ev(self.P[a, b])
                C[a, :, 1 + b, 1] = ev(self.G[0, a, b])
                C[a, :, 1 + b, 2] = ev(self.G[1, a, b])
                C[a, :, 1 + b, 3] = -ev(self.gc[a, b])
            C[a, :, 3, 1] = ev(self.Pm[a, 0])
            C[a, :, 3, 2] = ev(self.Pm[a, 1])
            if self.U is not None:
                C[a, :, 3, 0] = -0.5 * ev(self.U[a])
        return C


def _tree_product(S: np.ndarray) -> np.ndarray:
    """``S[n-1] @ ... @ S[0]`` by pairwise reduction."""
    while S.shape[0] > 1:
        if S.shape[0] % 2:
            S = np.concatenate([S, np.eye(4)[None]], axis=0)
        S = np.einsum("nij,njk->nik", S[1::2], S[0::2])
    return S[0]


def _rk4_steps(coef: _Coefficients, seg: Curve, n: int, constants) -> np.ndarray:
    h = 1.0 / n
    ts = np.linspace(0.0, 1.0, 2 * n + 1)
    x, y, vx, vy = seg.evaluate(ts, constants)
    if not np.all(coef.M.domain.admissible(x, y)):
        bad = int(np.argmin(coef.M.domain.admissible(x, y)))
        raise DomainExit(f"curve leaves the domain near ({x[bad]:.6g}, {y[bad]:.6g})")
    C = coef.matrices(x, y)
    A = C[0] * vx[:, None, None] + C[1] * vy[:, None, None]
    A0, Ah, A1 = A[0:-1:2], A[1::2], A[2::2]
    B1 = A0
    B2 = Ah + (h / 2) * np.einsum("nij,njk->nik", Ah, B1)
    B3 = Ah + (h / 2) * np.einsum("nij,njk->nik", Ah, B2)
    B4 = A1 + h * np.einsum("nij,njk->nik", A1, B3)
    return np.eye(4)[None] + (h / 6) * (B1 + 2 * B2 + 2 * B3 + B4)


def parallel_transport(
    M: MobiusStructure,
    kind,
    T0,
    curve: Curve,
    *,
    rtol: float = 1e-8,
    start_steps: int = 16,
    max_steps: int = 2**20,
    samples: int = 16,
) -> TransportResult:
    """Integrate ``dT/dt = C(γ̇) T`` by classical RK4, halving the step
    until the endpoint moves by less than ``rtol`` (relative)."""
    kind = ConnectionKind.parse(kind)
    coef = _Coefficients(M, kind)
    T = np.asarray(T0.components() if isinstance(T0, TractorSection) else T0, dtype=float)
    if T.shape != (4,) or not np.all(np.isfinite(T)):
        raise ValueError("initial section must be 4 finite numbers")
    consts = M.constants
    segs = curve.segments()
    traj = []
    total_steps = 0
    changes_all = []
    last_change = 0.0
    order = None
    for si, seg in enumerate(segs):
        n = start_steps
        prev = None
        diffs = []
        while True:
            if n > max_steps:
                raise StepLimitExceeded(f"no convergence with {max_steps} steps")
            S = _rk4_steps(coef, seg, n, consts)
            end = _tree_product(S) @ T
            if prev is not None:
                ch = float(np.linalg.norm(end - prev) / max(np.linalg.norm(end), 1e-300))
                diffs.append((n, ch))
                if ch < rtol:
                    break
            prev = end
            n *= 2
        k = min(samples, n)
        chunks = S.reshape(k, n // k, 4, 4)
        cur = T.copy()
        x, y, _, _ = seg.evaluate(np.linspace(0, 1, k + 1), consts)
        traj.append(_row(si, len(segs), 0.0, x[0], y[0], cur))
        for c in range(k):
            cur = _tree_product(chunks[c]) @ cur
            traj.append(_row(si, len(segs), (c + 1) / k, x[c + 1], y[c + 1], cur))
        T = end
        total_steps += n
        changes_all.extend({"segment": si, "steps": nn, "relative_change": ch} for nn, ch in diffs)
        last_change = max(last_change, diffs[-1][1])
        o = estimate_order(diffs)
        order = o if order is None else (min(order, o) if o is not None else order)
    if len(segs) > 1:
        traj = [r for i, r in enumerate(traj) if i == 0 or r != traj[i - 1]]
    return TransportResult(T, traj, total_steps, last_change, order, changes_all)


def _row(si, nseg, t, x, y, v):
    return [(si + t) / nseg, float(x), float(y), *map(float, v)]


def estimate_order(diffs) -> float | None:
    """``log2`` of the ratio of successive step-halving changes."""
    usable = [(n, d) for n, d in diffs if d > 1e-14]
    if len(usable) < 2:
        return None
    (_, d0), (_, d1) = usable[-2], usable[-1]
    return float(math.log2(d0 / d1))


def section_at(M: MobiusStructure, T: TractorSection, point) -> np.ndarray:
    return T.at(M, float(point[0]), float(point[1]))


__all__ = [
    "GaugeMismatch",
    "DomainExit",
    "StepLimitExceeded",
    "ConnectionKind",
    "TractorSection",
    "tractor_from_scale",
    "TractorDerivative",
    "apply_connection",
    "tractor_metric",
    "metric_compatibility_defect",
    "constraint_residuals",
    "rescale_section",
    "Curve",
    "TransportResult",
    "parallel_transport",
    "estimate_order",
    "section_at",
]
