"""``mobius-ce`` command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 invalid structure, 3 parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .. import __version__
from ..einstein import RESIDUAL_TOL
from ..geom import DegenerateMetric, NonPositiveOmega
from ..mobius import InvalidStructure
from ..symcore import ParseError
from ..tractor import DomainExit, StepLimitExceeded
from . import report as R
from .problem import FIXTURES, ProblemFileError, fixture_path, load_problem

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_PARSE = 0, 1, 2, 3


def _resolve(path: str) -> Path:
    if path.startswith("fixture:"):
        name = path.split(":", 1)[1]
        if name not in FIXTURES:
            raise ProblemFileError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
        return fixture_path(name)
    return Path(path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mobius-ce", description="Conformal-to-Einstein analysis of Möbius surfaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol_default):
        sp.add_argument("problem", help="problem file, or fixture:NAME for a bundled example")
        sp.add_argument("--json", metavar="PATH", help="write the JSON report to PATH ('-' for stdout)")
        sp.add_argument("--tol", type=float, default=tol_default, help=f"pass threshold (default {tol_default:g})")
        return sp

    a = common(sub.add_parser("analyze", help="validate, classify, compute obstructions and kernel"), RESIDUAL_TOL)
    a.add_argument("--grid", type=int, default=21, help="verification grid size per axis")

    v = common(sub.add_parser("verify", help="check a candidate scale sigma"), RESIDUAL_TOL)
    v.add_argument("--sigma", required=True, help="candidate scale expression")
    v.add_argument("--grid", type=int, default=21)

    r = common(sub.add_parser("rescale-check", help="compare invariants under g -> Omega^2 g"), RESIDUAL_TOL)
    r.add_argument("--omega", required=True, help="positive conformal factor Omega")

    t = common(sub.add_parser("transport", help="parallel transport of a tractor along a curve"), 1e-8)
    t.add_argument("--kind", choices=("standard", "prolongation"), default="prolongation")
    t.add_argument("--init", required=True, help="scale expression, or four numbers 'sigma,mu1,mu2,Lambda'")
    t.add_argument("--curve", required=True, help="curve name from the file, 'x(t); y(t)', or 'poly: x0,y0; ...'")

    sub.add_parser("fixtures", help="list bundled example problems")
    return p


def _emit(rep: dict, target: str | None, summary: list[str]) -> None:
    text = R.dumps(rep)
    if target == "-":
        sys.stdout.write(text + "\n")
    else:
        if target:
            Path(target).write_text(text + "\n", encoding="utf-8")
        for line in summary:
            print(line)


def _verdict(d) -> str:
    return d["verdict"] if d else "n/a"


def _analyze_summary(rep: dict) -> list[str]:
    name = rep["problem"]["name"] or rep["problem"]["source"]
    out = [f"problem: {name}"]
    val = rep["validation"]
    out.append(f"validation: {'ok' if val['passed'] else 'FAILED'} (trace-K {_verdict(val['trace_minus_K'])})")
    if not val["passed"]:
        return out
    cls = rep["classification"]
    out.append(f"classification: {cls['label']}")
    if rep.get("generic"):
        out.append(f"E_ab: {_verdict(rep['generic']['E_vanishes'])}")
    if rep.get("reconstruction") and "sigma" in rep["reconstruction"]:
        out.append(f"sigma: {rep['reconstruction']['sigma']}")
    if rep.get("nongeneric"):
        ng = rep["nongeneric"]
        out.append(f"f: {ng['f']}")
        out.append(f"k + f*mu: {ng['k_plus_f_mu']} ({_verdict(ng['k_plus_f_mu_vanishes'])})")
    if rep.get("ode") and rep["ode"].get("ode"):
        out.append(f"eta: {rep['ode']['eta']}")
        out.append(f"ode: {rep['ode']['ode']}")
    if rep.get("flat_basis") and "elements" in rep["flat_basis"]:
        out.append("flat basis: " + ", ".join(e["sigma"] for e in rep["flat_basis"]["elements"]))
    k = rep["kernel"]
    out.append(f"kernel: {k['dimension']} ({k['status']})")
    for v in rep.get("verifications", []):
        out.append(f"verify {v['name']}: {'pass' if v['passed'] else 'fail'} max residual {v['max_residual']:.3e} [{v['method']}]")
    return out


def run(args) -> int:
    if args.command == "fixtures":
        for name in FIXTURES:
            print(f"{name}\t{fixture_path(name)}")
        return EXIT_OK

    problem = load_problem(_resolve(args.problem))
    if args.command == "analyze":
        rep, ok = R.analyze(problem, grid=args.grid, tol=args.tol)
        _emit(rep, args.json, _analyze_summary(rep))
        return EXIT_OK if ok else EXIT_INVALID
    if args.command == "verify":
        sigma = problem.expr(args.sigma, "sigma")
        rep = R.verify(problem, sigma, grid=args.grid, tol=args.tol)
        v = rep["verification"]
        _emit(rep, args.json, [f"sigma: {v['sigma']}", f"{'pass' if v['passed'] else 'fail'}: max residual {v['max_residual']:.3e} on {v['points']} points [{v['method']}]"])
        return EXIT_OK
    if args.command == "rescale-check":
        omega = problem.expr(args.omega, "omega")
        rep, ok = R.rescale_check(problem, omega)
        if not ok:
            _emit(rep, args.json, ["validation: FAILED"])
            return EXIT_INVALID
        lines = [
            f"Y_abc invariant: {rep['Y_abc_invariant']['holds']}",
            f"classification: {rep['classification']['original']} -> {rep['classification']['rescaled']}",
            f"weights ({'constant' if rep['constant_omega'] else 'pointwise'}): {rep['weights']['holds']}",
        ]
        for n, c in rep["weights"]["checks"].items():
            lines.append(f"  {n}: weight {c['weight']} {'ok' if c['holds'] else 'FAILS'}")
        _emit(rep, args.json, lines)
        return EXIT_OK
    if args.command == "transport":
        rep = R.transport(problem, args.kind, args.init, args.curve, tol=args.tol)
        res = rep["result"]
        lines = [
            f"endpoint: {res['endpoint']}",
            f"steps: {res['steps']}  halving change: {res['halving_change']:.3e}  order: {res['order_estimate']}",
        ]
        if "scale_section" in rep:
            lines.append(f"deviation from scale tractor: {rep['scale_section']['relative_deviation']:.3e}")
        _emit(rep, args.json, lines)
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ProblemFileError, ParseError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateMetric, InvalidStructure, NonPositiveOmega) as exc:
        print(f"invalid structure: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DomainExit, StepLimitExceeded, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
