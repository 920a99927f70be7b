"""JSON reports for the command-line tool."""

from __future__ import annotations

import json
import math
import time
from importlib import resources

import numpy as np

from .. import __version__
from ..einstein import (
    CoefficientNotFunctionOfEta,
    NotModelReachable,
    PathDependence,
    flat_kernel_basis,
    generic_obstruction,
    kernel_report,
    nongeneric_obstruction,
    ode_reduce,
    reconstruct_scale,
    RESIDUAL_TOL,
    verify_solution,
)
from ..geom import ConformalRescale
from ..mobius import WEIGHTS, MobiusStructure, classify, empirical_weight, f_density, k_law_residual, validate
from ..symcore import Expr, is_zero, simplify, to_text
from ..symcore.canonical import canonical
from ..symcore.expr import power
from ..symcore.numeric import evaluate
from ..tractor import TractorSection, parallel_transport, tractor_from_scale
from .problem import Problem

SCHEMA_VERSION = 1
PREVIEW_POINTS = 3


def load_schema() -> dict:
    text = (resources.files("mobius_ce") / "shell" / "report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def clean(obj):
    """Make ``obj`` strictly JSON-serialisable (no NaN, no numpy scalars)."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, Expr):
        return to_text(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(clean(report), indent=2, allow_nan=False)


def _header(command: str, problem: Problem) -> dict:
    return {
        "command": command,
        "tool": "mobius-ce",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "problem": {
            "name": problem.name,
            "source": problem.source,
            "coords": list(problem.coords),
            "metric": {k: to_text(v) for k, v in problem.metric.items()},
            "rho": {k: to_text(v) for k, v in problem.rho.items()},
            "domain": problem.domain.to_dict(),
            "positive": sorted(problem.positive),
        },
    }


def _preview(e: Expr, M: MobiusStructure) -> list:
    xs, ys = M.domain.sample_points
    xs, ys = xs[:PREVIEW_POINTS], ys[:PREVIEW_POINTS]
    v = np.broadcast_to(evaluate(e, M.domain.env(xs, ys)), xs.shape)
    return [{"point": [float(a), float(b)], "value": float(c)} for a, b, c in zip(xs, ys, v)]


def _entry(e, M: MobiusStructure, weight) -> dict:
    if isinstance(e, np.ndarray):
        return {
            "expr": [to_text(c) for c in e],
            "weight": weight,
            "samples": [_preview(c, M) for c in e],
        }
    return {"expr": to_text(e), "weight": weight, "samples": _preview(e, M)}


def invariants_dict(M: MobiusStructure) -> dict:
    inv = M.inv
    out = {
        "Y_abc": {f"Y_{a + 1}{b + 1}{c + 1}": to_text(inv.Y_abc[a, b, c]) for a, b, c in ((0, 0, 1), (1, 0, 1))},
        "Y": _entry(inv.Y, M, WEIGHTS["Y"]),
        "U": _entry(inv.U, M, WEIGHTS["U"]),
        "mu": _entry(inv.mu, M, None),
        "phi": _entry(inv.phi, M, None),
        "V": _entry(inv.V, M, WEIGHTS["V"]),
        "k": _entry(inv.k, M, WEIGHTS["k"]),
        "rho": _entry(inv.rho, M, WEIGHTS["rho"]),
        "UV": _entry(inv.UV, M, None),
    }
    try:
        out["f"] = _entry(f_density(M), M, WEIGHTS["f"])
    except ValueError:  # flat or generic
        out["f"] = None
    return out


def empirical_weights(M: MobiusStructure, omega: float = 2.0) -> dict:
    return {n: empirical_weight(M, n, omega) for n in ("mu", "phi", "k", "rho")}


def analyze(problem: Problem, *, grid: int = 21, tol: float = RESIDUAL_TOL) -> tuple[dict, bool]:
    """Full analysis.  Returns the report and whether the structure is valid."""
    t0 = time.perf_counter()
    M = problem.structure()
    rep = _header("analyze", problem)
    val = validate(M)
    rep["validation"] = val.to_dict()
    if not val.passed:
        rep["elapsed_seconds"] = time.perf_counter() - t0
        return rep, False

    cls = classify(M)
    rep["classification"] = cls.to_dict()
    rep["invariants"] = invariants_dict(M)
    rep["empirical_weights"] = empirical_weights(M) if cls.label != "Flat" else {}
    rep["generic"] = rep["reconstruction"] = rep["nongeneric"] = rep["ode"] = rep["flat_basis"] = None
    verifications = []
    gen = ng = ode = ode_err = None

    if cls.label == "Generic":
        gen = generic_obstruction(M)
        rep["generic"] = gen.to_dict()
        if gen.E_verdict.is_zero:
            try:
                rec = reconstruct_scale(M, gen.K, obstruction=gen)
                rep["reconstruction"] = rec.to_dict()
                if rec.sigma is not None:
                    v = verify_solution(M, rec.sigma, grid=grid)
                    verifications.append(_verification_entry("reconstructed", v, tol))
                else:
                    rep["reconstruction"]["samples"] = [
                        {"point": [x, y], "sigma": rec.field(x, y)} for x, y in _few_points(M)
                    ]
            except PathDependence as exc:
                rep["reconstruction"] = {"method": "failed", "error": str(exc)}
    elif cls.label == "NonGeneric":
        ng = nongeneric_obstruction(M)
        rep["nongeneric"] = ng.to_dict()
        if ng.obstruction_verdict.is_zero and ng.murho_verdict.is_zero:
            try:
                ode = ode_reduce(M, obstruction=ng)
                rep["ode"] = ode.to_dict()
            except CoefficientNotFunctionOfEta as exc:
                ode_err = exc
                rep["ode"] = {"reduced": False, "error": str(exc)}
            except (ArithmeticError, ValueError) as exc:
                ode_err = exc
                rep["ode"] = {"reduced": False, "error": str(exc)}
    elif cls.label == "Flat":
        omega = problem.gauge.get("omega")
        try:
            basis = flat_kernel_basis(M, omega)
            rep["flat_basis"] = {
                "omega": to_text(omega) if omega is not None else None,
                "elements": [
                    {"sigma": to_text(b.sigma), "verification": b.verification.to_dict()} for b in basis
                ],
            }
        except NotModelReachable as exc:
            rep["flat_basis"] = {"omega": to_text(omega) if omega is not None else None, "error": str(exc)}

    rep["kernel"] = kernel_report(M, cls, gen, ng, ode, ode_err).to_dict()
    for name, sigma in problem.candidates.items():
        verifications.append(_verification_entry(name, verify_solution(M, sigma, grid=grid), tol))
    rep["verifications"] = verifications
    rep["elapsed_seconds"] = time.perf_counter() - t0
    return rep, True


def _few_points(M: MobiusStructure):
    xs, ys = M.domain.sample_points
    return [(float(a), float(b)) for a, b in zip(xs[:PREVIEW_POINTS], ys[:PREVIEW_POINTS])]


def _verification_entry(name: str, v, tol: float) -> dict:
    d = v.to_dict()
    d["name"] = name
    d["tol"] = tol
    d["passed"] = v.passes(tol)
    return d


def verify(problem: Problem, sigma: Expr, *, grid: int = 21, tol: float = RESIDUAL_TOL) -> dict:
    M = problem.structure()
    rep = _header("verify", problem)
    rep["verification"] = _verification_entry("sigma", verify_solution(M, sigma, grid=grid), tol)
    return rep


# ---------------------------------------------------------------- rescale check

TENSORIAL = ("Y_1", "Y_2", "U_1", "U_2", "rho")
SCALED = TENSORIAL + ("V_1", "V_2", "k", "f")


def _weight_of(name: str) -> int:
    return WEIGHTS[name.split("_")[0]]


def _scalar(M: MobiusStructure, name: str) -> Expr:
    inv = M.inv
    if name == "f":
        return f_density(M)
    if "_" in name:
        base, i = name.split("_")
        return getattr(inv, base)[int(i) - 1]
    return getattr(inv, name)


def _same(a: Expr, b: Expr, M: MobiusStructure) -> dict:
    d = simplify(a - b)
    v = is_zero(d, M.domain)
    return {"holds": v.is_zero, "difference": v.to_dict()}


def rescale_check(problem: Problem, omega: Expr) -> tuple[dict, bool]:
    """Gauge behaviour under ``g -> Omega^2 g``.  Raises NonPositiveOmega."""
    M = problem.structure()
    rep = _header("rescale-check", problem)
    rep["omega"] = to_text(omega)
    val = validate(M)
    if not val.passed:
        rep["validation"] = val.to_dict()
        return rep, False
    r = ConformalRescale(omega, M.coords)
    Mh = M.rescaled(r)
    rep["validation"] = val.to_dict()
    rep["rescaled_validation"] = validate(Mh).to_dict()
    rep["rescaled_metric"] = {"g11": to_text(Mh.g.g11), "g12": to_text(Mh.g.g12), "g22": to_text(Mh.g.g22)}
    rep["rescaled_rho"] = {"P11": to_text(Mh.P[0, 0]), "P12": to_text(Mh.P[0, 1]), "P22": to_text(Mh.P[1, 1])}

    ya, yb = M.inv.Y_abc, Mh.inv.Y_abc
    comps = {}
    for a, b, c in ((0, 0, 1), (1, 0, 1)):
        comps[f"Y_{a + 1}{b + 1}{c + 1}"] = _same(yb[a, b, c], ya[a, b, c], M)
    rep["Y_abc_invariant"] = {"holds": all(v["holds"] for v in comps.values()), "components": comps}

    c0, c1 = classify(M), classify(Mh)
    rep["classification"] = {"original": c0.label, "rescaled": c1.label, "holds": c0.label == c1.label}

    const = r.is_constant
    rep["constant_omega"] = const
    flat = c0.label == "Flat"
    names = [n for n in (SCALED if const else TENSORIAL) if n != "f" or c0.label == "NonGeneric"]
    checks = {}
    for n in names:
        w = _weight_of(n)
        try:
            q, qh = _scalar(M, n), _scalar(Mh, n)
        except ValueError:
            continue
        entry = _same(qh, simplify(power(omega, w) * q), M)
        entry["weight"] = w
        checks[n] = entry
    rep["weights"] = {"holds": all(v["holds"] for v in checks.values()), "checks": checks}
    if not flat:
        kv = is_zero(k_law_residual(M, r), M.domain)
        rep["k_law"] = {"form": "k^ = Omega^-8 (k + g^cd Upsilon_c V_d)", "holds": kv.is_zero, "residual": kv.to_dict()}
    if const and not flat:
        value = canonical(omega).constant_value()
        rep["empirical_weights"] = empirical_weights(M, float(value))
    else:
        rep["empirical_weights"] = {}
    return rep, True


# ---------------------------------------------------------------- transport


def _h_numeric(M: MobiusStructure, T, point) -> float:
    env = M.domain.env(float(point[0]), float(point[1]))
    gi = np.array([[float(evaluate(M.g.inverse[i, j], env)) for j in range(2)] for i in range(2)])
    s, m1, m2, lam = (float(c) for c in T)
    mu = np.array([m1, m2])
    return 2 * s * lam + float(mu @ gi @ mu)


def transport(problem: Problem, kind: str, init: str, curve_spec: str, *, tol: float = 1e-8) -> dict:
    M = problem.structure()
    curve = problem.curve(curve_spec)
    seg0, segN = curve.segments()[0], curve.segments()[-1]
    consts = M.constants
    x0, y0, _, _ = seg0.evaluate(np.array([0.0]), consts)
    x1, y1, _, _ = segN.evaluate(np.array([1.0]), consts)
    start, end = (float(x0[0]), float(y0[0])), (float(x1[0]), float(y1[0]))
    for p in (start, end):
        if not M.domain.contains(*p):
            from ..tractor import DomainExit

            raise DomainExit(f"curve endpoint {list(p)} lies outside the domain")

    sigma_section: TractorSection | None = None
    parts = [p.strip() for p in init.split(",")]
    if len(parts) == 4:
        try:
            T0 = np.array([float(p) for p in parts])
        except ValueError:
            T0 = None
    else:
        T0 = None
    if T0 is None:
        sigma = problem.expr(init, "init")
        sigma_section = tractor_from_scale(M, sigma)
        T0 = sigma_section.at(M, *start)

    res = parallel_transport(M, kind, T0, curve, rtol=tol)
    rep = _header("transport", problem)
    rep["kind"] = kind
    rep["curve"] = curve.to_dict()
    rep["start"], rep["end"] = list(start), list(end)
    rep["initial"] = T0.tolist()
    rep["result"] = res.to_dict()
    rep["tractor_norm"] = {"start": _h_numeric(M, T0, start), "end": _h_numeric(M, res.endpoint, end)}
    if sigma_section is not None:
        expect = sigma_section.at(M, *end)
        rep["scale_section"] = {
            "sigma": to_text(sigma_section.sigma),
            "expected_endpoint": expect.tolist(),
            "relative_deviation": float(np.linalg.norm(res.endpoint - expect) / max(np.linalg.norm(expect), 1e-300)),
        }
    return rep
