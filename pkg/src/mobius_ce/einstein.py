"""Conformal-to-Einstein analysis: obstructions, scale reconstruction,
ODE reduction, candidate verification and kernel dimensions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geom import covariant_derivative, gradient, tensor
from .mobius import MobiusStructure, classify, f_density
from .symcore import ZERO, Expr, Num, Sym, as_expr, differentiate, is_zero, simplify
from .symcore.canonical import canonical, equal
from .symcore.expr import add, depends_on, func, has_functions, is_positive, iter_nodes, is_rational, mul, power, substitute
from .symcore.integrate import numeric_line_integral, potential
from .symcore.jet import eval_jet
from .symcore.numeric import evaluate
from .symcore.printer import to_text
from .symcore.zero import ZeroVerdict

RESIDUAL_TOL = 1e-10
PATH_TOL = 1e-9
ETA_TOL = 1e-10


class NotGeneric(ValueError):
    pass


class NotNonGeneric(ValueError):
    pass


class NotFlat(ValueError):
    pass


class NotModelReachable(ValueError):
    pass


class ObstructionNonzero(ValueError):
    pass


class PathDependence(ValueError):
    pass


class MurhoViolated(ValueError):
    pass


class CoefficientNotFunctionOfEta(ValueError):
    def __init__(self, message: str, report: "OdeReduction"):
        super().__init__(message)
        self.report = report


def combine(verdicts) -> ZeroVerdict:
    """Joint verdict for a tensor: zero iff every component is."""
    verdicts = list(verdicts)
    for v in verdicts:
        if v.is_nonzero:
            return v
    if any(v.kind == ZeroVerdict.UNKNOWN for v in verdicts):
        return next(v for v in verdicts if v.kind == ZeroVerdict.UNKNOWN)
    numeric = [v for v in verdicts if v.kind == ZeroVerdict.NUMERIC]
    if numeric:
        return max(numeric, key=lambda v: v.max_abs or 0.0)
    return verdicts[0] if verdicts else ZeroVerdict(ZeroVerdict.PROVED)


def _exprs(t) -> list[str]:
    return [to_text(c) for c in np.asarray(t, dtype=object).ravel()]


# ---------------------------------------------------------------- generic branch


def generic_k_form(M: MobiusStructure, inv=None) -> np.ndarray:
    """``K_a = (mu eps_a^b V_b + k U_a) / (U_c V^c)``."""
    inv = inv or M.inv
    label = classify(M).label
    if label != "Generic":
        raise NotGeneric(f"structure is {label}, not Generic")
    g = M.g
    el, gi = g.eps_lower, g.inverse
    inv_uv = power(inv.UV, -1)
    K = tensor(1)
    for a in range(2):
        eV = sum((el[a, c] * gi[c, b] * inv.V[b] for b in range(2) for c in range(2)), ZERO)
        K[a] = simplify((inv.mu * eV + inv.k * inv.U[a]) * inv_uv)
    return K


@dataclass(frozen=True, eq=False)
class GenericObstruction:
    K: np.ndarray
    E: np.ndarray
    curl: Expr
    trace: Expr
    E_verdict: ZeroVerdict
    curl_verdict: ZeroVerdict
    component_verdicts: dict

    def to_dict(self) -> dict:
        return {
            "K": _exprs(self.K),
            "E": {"E11": to_text(self.E[0, 0]), "E12": to_text(self.E[0, 1]), "E22": to_text(self.E[1, 1])},
            "E_vanishes": self.E_verdict.to_dict(),
            "E_components": {k: v.to_dict() for k, v in self.component_verdicts.items()},
            "curl_K": to_text(self.curl),
            "curl_vanishes": self.curl_verdict.to_dict(),
            "trace_E": to_text(self.trace),
        }


def generic_obstruction(M: MobiusStructure, K=None) -> GenericObstruction:
    """``E_ab = ∇_a K_b + K_a K_b + P_ab - ½(∇_c K^c + K_c K^c + K) g_ab``."""
    if K is None:
        K = generic_k_form(M)
    elif classify(M).label != "Generic":
        raise NotGeneric("structure is not Generic")
    g = M.g
    dK = covariant_derivative(K, "l", g)
    s = simplify(g.trace(dK) + g.dot(K, K) + g.gauss_curvature)
    gc = g.components
    E = tensor(2)
    for a, b in itertools.product(range(2), repeat=2):
        E[a, b] = simplify(dK[a, b] + K[a] * K[b] + M.P[a, b] - s * gc[a, b] * Fraction(1, 2))
    curl = simplify(g.d(K[1], 0) - g.d(K[0], 1))
    comps = {"E11": is_zero(E[0, 0], M.domain), "E12": is_zero(E[0, 1], M.domain), "E22": is_zero(E[1, 1], M.domain)}
    return GenericObstruction(
        K, E, curl, g.trace(E), combine(comps.values()), is_zero(curl, M.domain), comps
    )


@dataclass(frozen=True, eq=False)
class ScaleField:
    """Numerically integrated scale ``exp(∫ K)`` from a base point."""

    K: tuple[Expr, Expr]
    base: tuple[float, float]
    coords: tuple[str, str]
    constants: dict

    def log_sigma(self, x: float, y: float) -> float:
        kw = dict(coords=self.coords, constants=self.constants)
        a = numeric_line_integral(self.K, self.base, (x, y), order="xy", **kw)
        b = numeric_line_integral(self.K, self.base, (x, y), order="yx", **kw)
        if abs(a - b) > PATH_TOL * max(1.0, abs(a)):
            raise PathDependence(f"L-paths to ({x}, {y}) disagree by {abs(a - b):.3e}")
        return a

    def __call__(self, x: float, y: float) -> float:
        return float(np.exp(self.log_sigma(x, y)))


@dataclass(frozen=True, eq=False)
class ScaleReconstruction:
    sigma: Expr | None
    field: ScaleField | None
    base: tuple[float, float]
    method: str  # symbolic | numeric

    def to_dict(self) -> dict:
        d = {"method": self.method, "basepoint": list(self.base)}
        if self.sigma is not None:
            d["sigma"] = to_text(self.sigma)
        return d


def default_basepoint(M: MobiusStructure) -> tuple[float, float]:
    (x0, x1), (y0, y1) = M.domain.bounds
    c = ((x0 + x1) / 2, (y0 + y1) / 2)
    if M.domain.contains(*c):
        return c
    xs, ys = M.domain.sample_points
    return float(xs[0]), float(ys[0])


def reconstruct_scale(M: MobiusStructure, K, basepoint=None, *, obstruction: GenericObstruction | None = None):
    """``sigma = exp(∫ K)`` normalised to 1 at ``basepoint``."""
    if obstruction is not None and not obstruction.E_verdict.is_zero:
        raise ObstructionNonzero("E_ab does not vanish")
    base = tuple(float(b) for b in (basepoint if basepoint is not None else default_basepoint(M)))
    K = tuple(K)
    F = potential(K, M.coords)
    if F is not None:
        at_base = {c: Num(Fraction(b).limit_denominator(10**12)) for c, b in zip(M.coords, base)}
        F0 = simplify(substitute(F, at_base))
        sigma = simplify(func("exp", simplify(F - F0)))
        return ScaleReconstruction(sigma, None, base, "symbolic")
    curl = simplify(differentiate(K[1], M.coords[0]) - differentiate(K[0], M.coords[1]))
    cv = is_zero(curl, M.domain)
    if cv.is_nonzero:
        raise PathDependence(f"curl of K is nonzero at {cv.witness}")
    fld = ScaleField(K, base, M.coords, M.constants)
    return ScaleReconstruction(None, fld, base, "numeric")


# ---------------------------------------------------------------- non-generic branch


@dataclass(frozen=True, eq=False)
class NonGenericObstruction:
    f: Expr
    obstruction: Expr  # k + f mu
    murho: Expr
    obstruction_verdict: ZeroVerdict
    murho_verdict: ZeroVerdict

    def to_dict(self) -> dict:
        return {
            "f": to_text(self.f),
            "k_plus_f_mu": to_text(self.obstruction),
            "k_plus_f_mu_vanishes": self.obstruction_verdict.to_dict(),
            "murho_residual": to_text(self.murho),
            "murho_vanishes": self.murho_verdict.to_dict(),
        }


def nongeneric_obstruction(M: MobiusStructure, inv=None) -> NonGenericObstruction:
    inv = inv or M.inv
    label = classify(M).label
    if label != "NonGeneric":
        raise NotNonGeneric(f"structure is {label}, not NonGeneric")
    f = f_density(M)
    obs = simplify(inv.k + f * inv.mu)
    return NonGenericObstruction(f, obs, inv.murho, is_zero(obs, M.domain), is_zero(inv.murho, M.domain))


@dataclass(frozen=True, eq=False)
class OdeReduction:
    omega: tuple[Expr, Expr]
    eta: Expr | None
    Q: Expr
    R: Expr
    c1: Expr
    c0: Expr
    constode1: Expr
    constode2: Expr
    constode1_verdict: ZeroVerdict
    constode2_verdict: ZeroVerdict
    closed_verdict: ZeroVerdict
    variable: str | None = None
    c1_eta: Expr | None = None
    c0_eta: Expr | None = None
    eta_check: dict = field(default_factory=dict)

    @property
    def reduced(self) -> bool:
        return self.constode1_verdict.is_zero and self.constode2_verdict.is_zero

    @property
    def ode(self) -> str | None:
        if not self.reduced or self.c1_eta is None:
            return None
        return format_ode(self.c1_eta, self.c0_eta)

    def to_dict(self) -> dict:
        d = {
            "omega": [to_text(w) for w in self.omega],
            "omega_closed": self.closed_verdict.to_dict(),
            "eta": to_text(self.eta) if self.eta is not None else None,
            "Q_tilde": to_text(self.Q),
            "R_tilde": to_text(self.R),
            "c1": to_text(self.c1),
            "c0": to_text(self.c0),
            "constode1": to_text(self.constode1),
            "constode1_vanishes": self.constode1_verdict.to_dict(),
            "constode2": to_text(self.constode2),
            "constode2_vanishes": self.constode2_verdict.to_dict(),
            "reduced": self.reduced,
            "variable": self.variable,
            "c1_of_eta": to_text(self.c1_eta) if self.c1_eta is not None else None,
            "c0_of_eta": to_text(self.c0_eta) if self.c0_eta is not None else None,
            "ode": self.ode,
            "equal_eta_check": self.eta_check,
        }
        return d


def format_ode(c1: Expr, c0: Expr) -> str:
    """``xi'' + c1*xi' + c0*xi = 0`` in the printer's syntax."""
    e = add(Sym("xi''"), mul(c1, Sym("xi'")), mul(c0, Sym("xi")))
    return f"{to_text(e)} = 0"


def _directional(vec, e: Expr, coords) -> Expr:
    return simplify(sum((vec[a] * differentiate(e, coords[a]) for a in range(2)), ZERO))


def _hess_contract(M: MobiusStructure, A, B, s: Expr) -> Expr:
    """``A^a B^b ∇_b ∇_a s``."""
    H = covariant_derivative(gradient(M.g, s), "l", M.g)
    return simplify(sum((A[a] * B[b] * H[b, a] for a in range(2) for b in range(2)), ZERO))


def _qr(M: MobiusStructure, A, rho: Expr) -> Expr:
    """``P_ab A^a A^b - A^a A^b ∇∇ρ/(6ρ) + 7 (A^a ∇_a ρ)^2/(36 ρ^2)``."""
    PAA = sum((M.P[a, b] * A[a] * A[b] for a in range(2) for b in range(2)), ZERO)
    Ar = _directional(A, rho, M.coords)
    irho = power(rho, -1)
    return simplify(
        PAA - _hess_contract(M, A, A, rho) * irho * Fraction(1, 6) + Fraction(7, 36) * Ar * Ar * irho * irho
    )


def ode_reduce(M: MobiusStructure, inv=None, *, obstruction: NonGenericObstruction | None = None) -> OdeReduction:
    """Reduce the equation on a non-generic structure to a linear ODE in ``eta``."""
    inv = inv or M.inv
    obs = obstruction or nongeneric_obstruction(M, inv)
    if not obs.murho_verdict.is_zero:
        raise MurhoViolated(f"Y^a d_a rho - 6 mu rho is nonzero at {obs.murho_verdict.witness}")
    if not obs.obstruction_verdict.is_zero:
        raise ObstructionNonzero(f"k + f mu is nonzero at {obs.obstruction_verdict.witness}")
    x, y = M.coords
    rho = inv.rho
    rm13 = power(rho, Fraction(-1, 3))
    omega = (simplify(rm13 * inv.U[0]), simplify(rm13 * inv.U[1]))
    closed = simplify(differentiate(omega[1], x) - differentiate(omega[0], y))
    closed_v = is_zero(closed, M.domain)
    eta = potential(omega, M.coords)
    Q = _qr(M, inv.Y_up, rho)
    R = _qr(M, inv.U_up, rho)
    f = obs.f
    c1 = simplify(Fraction(2, 3) * f * power(rho, Fraction(-2, 3)))
    c0 = simplify((R - Q) * power(rho, Fraction(-4, 3)))
    r1 = _directional(inv.Y_up, c1, M.coords)
    r2 = _directional(inv.Y_up, c0, M.coords)
    v1, v2 = is_zero(r1, M.domain), is_zero(r2, M.domain)
    red = OdeReduction(omega, eta, Q, R, c1, c0, r1, r2, v1, v2, closed_v)
    if not red.reduced:
        raise CoefficientNotFunctionOfEta("a coefficient varies along the level sets of eta", red)
    check = _equal_eta_check(M, inv, omega, eta, (c1, c0))
    var, c1e, c0e = _express_in_eta(M, eta, c1, c0)
    return OdeReduction(omega, eta, Q, R, c1, c0, r1, r2, v1, v2, closed_v, var, c1e, c0e, check)


def _equal_eta_check(M, inv, omega, eta, coeffs) -> dict:
    """Move each sample along the level set of ``eta`` and compare coefficients."""
    if eta is None:
        return {"checked": 0, "passed": False, "note": "no closed-form potential"}
    env0 = M.constants
    x, y = M.coords

    def ev(e, px, py):
        env = dict(env0)
        env[x], env[y] = px, py
        return evaluate(e, env)

    dom = M.domain
    xs, ys = dom.sample_points
    xs, ys = xs[:32], ys[:32]
    worst, checked = 0.0, 0
    Yup = inv.Y_up
    (bx0, bx1), (by0, by1) = dom.bounds
    h = 0.05 * min(bx1 - bx0, by1 - by0)
    for px, py in zip(xs, ys):
        e0 = float(ev(eta, px, py))
        ty = np.array([float(ev(Yup[0], px, py)), float(ev(Yup[1], px, py))])
        n = np.linalg.norm(ty)
        if not np.isfinite(n) or n == 0:
            continue
        q = np.array([px, py]) + h * ty / n
        for _ in range(50):
            de = float(ev(eta, *q)) - e0
            w = np.array([float(ev(omega[0], *q)), float(ev(omega[1], *q))])
            gi = np.array([[float(ev(M.g.inverse[i, j], *q)) for j in range(2)] for i in range(2)])
            grad = gi @ w
            nn = float(w @ grad)
            if not np.isfinite(nn) or nn == 0:
                break
            q = q - de * grad / nn
            if abs(de) < 1e-15 * max(1.0, abs(e0)):
                break
        if not dom.contains(*q) or abs(float(ev(eta, *q)) - e0) > 1e-12 * max(1.0, abs(e0)):
            continue
        for c in coeffs:
            a, b = float(ev(c, px, py)), float(ev(c, *q))
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
        checked += 1
    return {"checked": checked, "max_difference": worst, "tol": ETA_TOL, "passed": checked > 0 and worst <= ETA_TOL}


def _express_in_eta(M, eta, c1, c0):
    """Rewrite ``c1, c0`` as functions of ``eta`` when ``eta`` is a monomial
    or affine function of a single coordinate."""
    if eta is None:
        return None, None, None
    deps = [c for c in M.coords if depends_on(eta, c)]
    if len(deps) != 1:
        return None, None, None
    v = deps[0]
    other = [c for c in M.coords if c != v][0]
    if depends_on(c1, other) or depends_on(c0, other):
        return None, None, None
    vs = next(n for n in _syms(eta) if n.name == v)
    if equal(eta, vs):
        return v, c1, c0
    d = differentiate(eta, v)
    if not depends_on(d, v):
        # eta = alpha v + beta
        t = Sym("eta")
        beta = simplify(eta - d * vs)
        inv_ = simplify((t - beta) * power(d, -1))
    else:
        r = simplify(vs * d * power(eta, -1))
        if depends_on(r, v) or not canonical(r).is_constant:
            return None, None, None
        rv = canonical(r).constant_value()
        alpha = simplify(eta * power(vs, -rv))
        if depends_on(alpha, v):
            return None, None, None
        t = Sym("eta", positive=is_positive(alpha) and vs.positive)
        inv_ = power(simplify(t * power(alpha, -1)), 1 / rv)
    c1e = simplify(substitute(c1, {v: inv_}))
    c0e = simplify(substitute(c0, {v: inv_}))
    if depends_on(c1e, v) or depends_on(c0e, v):
        return None, None, None
    return "eta", c1e, c0e


def _syms(e: Expr):
    return [n for n in iter_nodes(e) if isinstance(n, Sym)]


# ---------------------------------------------------------------- verification


@dataclass(frozen=True, eq=False)
class VerificationReport:
    sigma: Expr
    exact: ZeroVerdict
    max_residual: float
    mean_residual: float
    worst_point: tuple[float, float] | None
    Lambda: Expr
    grid: int
    points: int
    method: str
    residual: np.ndarray
    sigma_zeros: int = 0

    @property
    def passed(self) -> bool:
        return self.exact.kind == ZeroVerdict.PROVED or self.max_residual < RESIDUAL_TOL

    def passes(self, tol: float) -> bool:
        return self.exact.kind == ZeroVerdict.PROVED or self.max_residual < tol

    def to_dict(self) -> dict:
        return {
            "sigma": to_text(self.sigma),
            "exact": self.exact.to_dict(),
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "worst_point": list(self.worst_point) if self.worst_point else None,
            "Lambda": to_text(self.Lambda),
            "grid": self.grid,
            "points": self.points,
            "method": self.method,
            "sigma_sign_changes": self.sigma_zeros,
        }


def einstein_residual(M: MobiusStructure, sigma: Expr) -> np.ndarray:
    """Trace-free part of ``∇_a ∇_b σ + P_ab σ``."""
    g = M.g
    H = covariant_derivative(gradient(g, sigma), "l", g)
    T = tensor(2)
    for a, b in itertools.product(range(2), repeat=2):
        T[a, b] = H[a, b] + M.P[a, b] * sigma
    tr = g.trace(T)
    gc = g.components
    out = tensor(2)
    for a, b in itertools.product(range(2), repeat=2):
        out[a, b] = simplify(T[a, b] - gc[a, b] * tr * Fraction(1, 2))
    return out


def lambda_of(M: MobiusStructure, sigma: Expr) -> Expr:
    """``Λ = -½(Δσ + Kσ)``."""
    return simplify(Fraction(-1, 2) * (M.g.laplacian(sigma) + M.g.gauss_curvature * sigma))


def _all_rational(M: MobiusStructure, sigma: Expr) -> bool:
    parts = [sigma, M.g.g11, M.g.g12, M.g.g22] + list(M.P.ravel())
    return all(is_rational(p) for p in parts)


def _jet_residuals(M: MobiusStructure, sigma: Expr, xs, ys) -> np.ndarray:
    env = M.domain.env(xs, ys)
    G = np.empty((2, 2, 2) + xs.shape)
    for a, b, c in itertools.product(range(2), repeat=3):
        G[a, b, c] = np.broadcast_to(evaluate(M.g.christoffel[a, b, c], env), xs.shape)
    gm = np.empty((2, 2) + xs.shape)
    gi = np.empty((2, 2) + xs.shape)
    P = np.empty((2, 2) + xs.shape)
    for a, b in itertools.product(range(2), repeat=2):
        gm[a, b] = np.broadcast_to(evaluate(M.g.components[a, b], env), xs.shape)
        gi[a, b] = np.broadcast_to(evaluate(M.g.inverse[a, b], env), xs.shape)
        P[a, b] = np.broadcast_to(evaluate(M.P[a, b], env), xs.shape)
    out = np.full(xs.shape, np.nan)
    consts = M.constants
    for i, (px, py) in enumerate(zip(xs, ys)):
        try:
            j = eval_jet(sigma, (px, py), 2, coords=M.coords, constants=consts)
        except (ArithmeticError, ValueError):
            continue
        s = j.value
        ds = np.array([j.derivative(1, 0), j.derivative(0, 1)])
        dd = np.array([[j.derivative(2, 0), j.derivative(1, 1)], [j.derivative(1, 1), j.derivative(0, 2)]])
        T = dd - np.einsum("cab,c->ab", G[..., i], ds) + P[..., i] * s
        tr = np.einsum("ab,ab->", gi[..., i], T)
        R = T - 0.5 * gm[..., i] * tr
        out[i] = np.max(np.abs([R[0, 0], R[0, 1], R[1, 1]]))
    return out


def verify_solution(M: MobiusStructure, sigma, *, grid: int = 21) -> VerificationReport:
    """Residual of the conformal-to-Einstein equation for a candidate scale."""
    sigma = as_expr(sigma)
    R = einstein_residual(M, sigma)
    comps = (R[0, 0], R[0, 1], R[1, 1])
    Lam = lambda_of(M, sigma)
    xs, ys = M.domain.grid(grid)
    if all(canonical(c).is_zero for c in comps):
        exact = ZeroVerdict(ZeroVerdict.PROVED)
        vals = np.zeros(xs.shape)
        method = "exact"
    else:
        exact = combine(is_zero(c, M.domain) for c in comps)
        if _all_rational(M, sigma) or not has_functions(sigma):
            env = M.domain.env(xs, ys)
            vals = np.max([np.abs(np.broadcast_to(evaluate(c, env), xs.shape)) for c in comps], axis=0)
            method = "symbolic-sampled"
        else:
            vals = _jet_residuals(M, sigma, xs, ys)
            method = "jet"
    ok = np.isfinite(vals)
    if not ok.any():
        return VerificationReport(sigma, exact, float("nan"), float("nan"), None, Lam, grid, 0, method, vals)
    i = int(np.nanargmax(np.where(ok, vals, -1.0)))
    sv = np.broadcast_to(evaluate(sigma, M.domain.env(xs, ys)), xs.shape)
    sign_changes = int(np.any(sv[np.isfinite(sv)] > 0) and np.any(sv[np.isfinite(sv)] < 0))
    return VerificationReport(
        sigma,
        exact,
        float(vals[ok].max()),
        float(vals[ok].mean()),
        (float(xs[i]), float(ys[i])),
        Lam,
        grid,
        int(ok.sum()),
        method,
        vals,
        sign_changes,
    )


# ---------------------------------------------------------------- flat case and kernel


FLAT_MODEL_BASIS = ("1", "x", "y", "-(x^2+y^2)/2")


def _is_model(M: MobiusStructure) -> bool:
    g = M.g
    return (
        equal(g.g11, Num(1))
        and equal(g.g12, ZERO)
        and equal(g.g22, Num(1))
        and all(canonical(p).is_zero for p in M.P.ravel())
    )


@dataclass(frozen=True, eq=False)
class FlatBasisElement:
    sigma: Expr
    section: object  # tractor.TractorSection in the structure's gauge
    verification: VerificationReport


def flat_kernel_basis(M: MobiusStructure, omega=None) -> list[FlatBasisElement]:
    """Basis of Einstein scales on a flat structure.

    ``M`` must be the flat model (δ, P = 0) in coordinates, or the model
    rescaled by ``omega`` (``g = Omega^2 δ``), in which case the model basis
    is carried over by the tractor rescaling law.
    """
    from .mobius import MobiusStructure as _MS
    from .tractor import rescale_section, tractor_from_scale
    from .symcore import parse_expr

    if classify(M).label != "Flat":
        raise NotFlat("structure is not flat")
    x, y = M.coords
    names = {"x": Sym(x), "y": Sym(y)}
    basis = [substitute(parse_expr(s), names) for s in FLAT_MODEL_BASIS]
    if omega is None:
        if not _is_model(M):
            raise NotModelReachable("flat structure is not the model and no rescale to it was given")
        out = []
        for s in basis:
            out.append(FlatBasisElement(s, tractor_from_scale(M, s), verify_solution(M, s)))
        return out
    omega = as_expr(omega)
    model = _MS.from_components(1, 0, 1, 0, 0, 0, domain=M.domain, coords=M.coords)
    target = model.rescaled(omega)
    same = equal(target.g.g11, M.g.g11) and equal(target.g.g12, M.g.g12) and equal(target.g.g22, M.g.g22)
    same = same and all(equal(target.P[a, b], M.P[a, b]) for a in range(2) for b in range(2))
    if not same:
        raise NotModelReachable("the given Omega does not map the flat model onto this structure")
    from .geom import ConformalRescale

    r = ConformalRescale(omega, M.coords)
    out = []
    for s in basis:
        T = rescale_section(tractor_from_scale(model, s), r, model)
        T = type(T)(T.sigma, T.mu1, T.mu2, T.Lambda, M.gauge)
        out.append(FlatBasisElement(T.sigma, T, verify_solution(M, T.sigma)))
    return out


@dataclass(frozen=True)
class KernelReport:
    label: str
    dimension: int
    status: str  # Exact | UpperBound | Conjectural
    justification: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "dimension": self.dimension,
            "status": self.status,
            "justification": self.justification,
        }


def kernel_report(
    M: MobiusStructure,
    classification=None,
    generic: GenericObstruction | None = None,
    nongeneric: NonGenericObstruction | None = None,
    ode: OdeReduction | None = None,
    ode_error: Exception | None = None,
) -> KernelReport:
    cls = classification or classify(M)
    label = cls.label
    if label == "Flat":
        return KernelReport(label, 4, "Exact", "flat: parallel sections of the flat tractor connection, four constants")
    if label == "Mixed":
        return KernelReport(
            label, 1, "UpperBound", "U_aV^a vanishes on part of the domain only; the generic part allows at most one scale"
        )
    if label == "Generic":
        if generic is None:
            try:
                generic = generic_obstruction(M)
            except NotGeneric:
                return KernelReport(label, 1, "UpperBound", "genericity could not be confirmed")
        v = generic.E_verdict
        if v.is_zero:
            return KernelReport(label, 1, "Exact", f"generic and E_ab vanishes ({v.kind}); sigma = exp(∫K)")
        if v.is_nonzero:
            return KernelReport(label, 0, "Exact", f"generic and E_ab is nonzero at {list(v.witness)}")
        return KernelReport(label, 1, "UpperBound", "E_ab verdict unknown")
    if label == "NonGeneric":
        if nongeneric is None:
            nongeneric = nongeneric_obstruction(M)
        if nongeneric.obstruction_verdict.is_nonzero:
            w = list(nongeneric.obstruction_verdict.witness)
            return KernelReport(label, 0, "Exact", f"non-generic and k + f mu is nonzero at {w}")
        if nongeneric.murho_verdict.is_nonzero:
            return KernelReport(label, 0, "Exact", "non-generic and the mu-rho condition fails")
        if isinstance(ode_error, CoefficientNotFunctionOfEta) or (ode is not None and not ode.reduced):
            return KernelReport(
                label, 1, "Conjectural", "a constode residual is nonzero; conjectured dimension, not computed"
            )
        if ode is None and ode_error is None:
            try:
                ode = ode_reduce(M, obstruction=nongeneric)
            except CoefficientNotFunctionOfEta:
                return KernelReport(
                    label, 1, "Conjectural", "a constode residual is nonzero; conjectured dimension, not computed"
                )
        if ode is not None and ode.reduced:
            return KernelReport(
                label, 2, "Exact", "non-generic, obstructions vanish and both constode residuals vanish: second order linear ODE in eta"
            )
        return KernelReport(label, 2, "UpperBound", f"ODE reduction failed: {ode_error}")
    return KernelReport(label, 4, "UpperBound", "classification unknown")


__all__ = [
    "NotGeneric",
    "NotNonGeneric",
    "NotFlat",
    "NotModelReachable",
    "ObstructionNonzero",
    "PathDependence",
    "MurhoViolated",
    "CoefficientNotFunctionOfEta",
    "GenericObstruction",
    "generic_k_form",
    "generic_obstruction",
    "ScaleField",
    "ScaleReconstruction",
    "reconstruct_scale",
    "NonGenericObstruction",
    "nongeneric_obstruction",
    "OdeReduction",
    "ode_reduce",
    "format_ode",
    "VerificationReport",
    "einstein_residual",
    "lambda_of",
    "verify_solution",
    "FlatBasisElement",
    "flat_kernel_basis",
    "KernelReport",
    "kernel_report",
]
