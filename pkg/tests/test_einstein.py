import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobius_ce.einstein import (
    CoefficientNotFunctionOfEta,
    NotFlat,
    NotModelReachable,
    ObstructionNonzero,
    flat_kernel_basis,
    generic_k_form,
    generic_obstruction,
    kernel_report,
    lambda_of,
    nongeneric_obstruction,
    ode_reduce,
    reconstruct_scale,
    verify_solution,
)
from mobius_ce.mobius import MobiusStructure, classify
from mobius_ce.symcore import ZeroVerdict, differentiate, equal, evaluate, is_zero, parse_expr, simplify
from mobius_ce.symcore.canonical import canonical
from mobius_ce.tractor import tractor_from_scale
from strategies import flat_rho

P = parse_expr
PROVED = ZeroVerdict.PROVED


# ---------------------------------------------------------------- generic branch


def test_example1_k_and_obstruction(structures):
    M = structures["example1"]
    K = generic_k_form(M)
    assert equal(K[0], P("x^2")) and equal(K[1], P("y^2"))
    ob = generic_obstruction(M)
    assert ob.E_verdict.kind == PROVED
    assert ob.curl_verdict.kind == PROVED


def test_example1_reconstruction(structures):
    M = structures["example1"]
    ob = generic_obstruction(M)
    rec = reconstruct_scale(M, ob.K, (0.0, 0.0), obstruction=ob)
    assert rec.method == "symbolic"
    assert equal(rec.sigma, P("exp((x^3+y^3)/3)"))
    rep = verify_solution(M, rec.sigma, grid=21)
    assert rep.exact.kind == PROVED and rep.max_residual < 1e-10
    assert kernel_report(M).dimension == 1 and kernel_report(M).status == "Exact"


def test_example1_necessity_direction(structures):
    M = structures["example1"]
    sigma = P("exp((x^3+y^3)/3)")
    assert verify_solution(M, sigma).exact.kind == PROVED
    K = generic_k_form(M)
    for a, v in enumerate(M.coords):
        assert equal(simplify(differentiate(sigma, v) / sigma), K[a])


def test_numeric_reconstruction_fallback():
    # K = (x^2/(1+x^2), 0) has a log/arctan-free antiderivative only numerically here
    M = MobiusStructure.from_components(1, 0, 1, P("y-x+y^4/2-x^4/2"), P("-x^2*y^2"), P("x-y+x^4/2-y^4/2"))
    ob = generic_obstruction(M)
    rec = reconstruct_scale(M, (P("1/(1+x^2)"), P("0")), (0.0, 0.0), obstruction=ob)
    assert rec.method == "numeric"
    assert rec.field(1.0, 0.3) == pytest.approx(np.exp(np.arctan(1.0)), rel=1e-10)


def test_example2_obstruction(structures):
    M = structures["example2"]
    K = generic_k_form(M)
    r2 = P("x^2+y^2")
    expected = [simplify((r2**2 * P("y") - 4 * P("x")) / (4 * r2)), simplify((-(r2**2) * P("x") - 4 * P("y")) / (4 * r2))]
    assert equal(K[0], expected[0]) and equal(K[1], expected[1])
    ob = generic_obstruction(M, K)
    assert ob.E_verdict.kind == ZeroVerdict.NONZERO
    wx, wy = ob.E_verdict.witness
    assert 0.5 <= wx * wx + wy * wy <= 2
    assert ob.curl_verdict.kind == ZeroVerdict.NONZERO
    assert kernel_report(M).dimension == 0
    with pytest.raises(ObstructionNonzero):
        reconstruct_scale(M, K, obstruction=ob)


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_obstruction_is_trace_free(structures, name):
    assert canonical(generic_obstruction(structures[name]).trace).is_zero


@settings(max_examples=20)
@given(flat_rho(small=True))
def test_obstruction_is_trace_free_random(p):
    M = MobiusStructure.from_components(1, 0, 1, *p)
    if classify(M).label == "Generic":
        assert canonical(generic_obstruction(M).trace).is_zero


# ---------------------------------------------------------------- non-generic branch


def test_quartic_obstruction(structures):
    M = structures["quartic"]
    ng = nongeneric_obstruction(M)
    assert equal(ng.f, P("4"))
    assert equal(ng.obstruction, P("4*x*y^3 - 4*x^3*y"))
    assert ng.obstruction_verdict.is_nonzero
    assert kernel_report(M).dimension == 0


def test_erf_family(structures):
    M = structures["erf"]
    ng = nongeneric_obstruction(M)
    assert ng.obstruction_verdict.kind == PROVED
    assert ng.murho_verdict.is_zero
    ode = ode_reduce(M, obstruction=ng)
    assert ode.reduced and ode.eta_check["passed"]
    assert equal(ode.eta, P("3*a^(2/3)*x^(4/3)/2"))
    rep = kernel_report(M)
    assert (rep.dimension, rep.status) == (2, "Exact")


@pytest.mark.parametrize(
    "sigma, mu1, lam",
    [
        ("exp(a*x^2)", "2*a*x*exp(a*x^2)", "-(a+2*a^2*x^2)*exp(a*x^2)"),
        (
            "erf(sqrt(2*a)*x)*exp(a*x^2)",
            "2*a*x*erf(sqrt(2*a)*x)*exp(a*x^2) + 2*sqrt(2*a/pi)*exp(-a*x^2)",
            "-(a+2*a^2*x^2)*erf(sqrt(2*a)*x)*exp(a*x^2)",
        ),
    ],
)
def test_erf_solutions(problems, structures, sigma, mu1, lam):
    prob, M = problems["erf"], structures["erf"]
    s = prob.expr(sigma)
    rep = verify_solution(M, s)
    assert rep.max_residual < 1e-8
    T = tractor_from_scale(M, s)
    d = M.domain
    for got, want in ((T.mu1, prob.expr(mu1)), (T.mu2, P("0")), (T.Lambda, prob.expr(lam))):
        assert is_zero(simplify(got - want), d).is_zero


def test_airy_ode(structures):
    M = structures["airy"]
    ode = ode_reduce(M)
    assert ode.ode == "xi'' - x*xi = 0"
    assert canonical(ode.c1_eta).is_zero
    assert equal(ode.c0_eta, P("-x"))
    assert equal(ode.eta, P("x"))
    assert equal(ode.Q, P("x/2")) and equal(ode.R, P("-x/2"))
    rep = kernel_report(M)
    assert (rep.dimension, rep.status) == (2, "Exact")


@pytest.mark.parametrize("kind", ["ai", "bi"])
def test_airy_functions_satisfy_emitted_ode(structures, kind):
    ode = ode_reduce(structures["airy"])
    f = mpmath.airyai if kind == "ai" else mpmath.airybi
    for x in np.linspace(-2, 2, 41):
        xi, dxi, ddxi = (float(f(x, derivative=k)) for k in range(3))
        c1 = float(evaluate(ode.c1_eta, {"x": x}))
        c0 = float(evaluate(ode.c0_eta, {"x": x}))
        assert abs(ddxi + c1 * dxi + c0 * xi) < 1e-8


@pytest.mark.parametrize("name", ["erf", "airy"])
def test_nongeneric_necessity(problems, structures, name):
    M = structures[name]
    for s in problems[name].candidates.values():
        assert verify_solution(M, s).passed
    ng = nongeneric_obstruction(M)
    assert ng.obstruction_verdict.is_zero and ng.murho_verdict.is_zero


def test_constode_failure_is_conjectural(structures):
    import dataclasses

    M = structures["airy"]
    ode = ode_reduce(M)
    bad = dataclasses.replace(ode, constode2_verdict=ZeroVerdict(ZeroVerdict.NONZERO, (0.0, 0.0), 1.0))
    assert not bad.reduced and bad.ode is None
    rep = kernel_report(M, ode=bad)
    assert (rep.dimension, rep.status) == (1, "Conjectural")
    rep = kernel_report(M, ode_error=CoefficientNotFunctionOfEta("c0 depends on y", None))
    assert rep.status == "Conjectural"


# ---------------------------------------------------------------- gauge invariance of verdicts


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_generic_verdicts_are_gauge_invariant(structures, name):
    M = structures[name]
    Mh = M.rescaled(P("1+x^2+y^2"))
    assert generic_obstruction(Mh).E_verdict.is_zero == generic_obstruction(M).E_verdict.is_zero


@pytest.mark.parametrize("name", ["quartic", "airy"])
def test_nongeneric_verdicts_are_gauge_invariant(structures, name):
    M = structures[name]
    Mh = M.rescaled(P("1+x^2+y^2"))
    a, b = nongeneric_obstruction(M), nongeneric_obstruction(Mh)
    assert a.obstruction_verdict.is_zero == b.obstruction_verdict.is_zero
    if a.obstruction_verdict.is_zero:
        oa, ob = ode_reduce(M), ode_reduce(Mh)
        assert oa.constode1_verdict.is_zero == ob.constode1_verdict.is_zero
        assert oa.constode2_verdict.is_zero == ob.constode2_verdict.is_zero


# ---------------------------------------------------------------- flat structures


def test_flat_kernel_basis(structures):
    M = structures["flat"]
    from mobius_ce.tractor import apply_connection

    basis = flat_kernel_basis(M)
    assert len(basis) == 4
    mat = np.array([b.section.at(M, 0.3, -0.2) for b in basis])
    assert abs(np.linalg.det(mat)) > 1e-6
    for b in basis:
        assert b.verification.exact.kind == PROVED
        assert apply_connection(M, "standard", b.section).is_exact_zero()
    rep = kernel_report(M)
    assert (rep.dimension, rep.status) == (4, "Exact")


def test_flat_basis_in_rescaled_gauge(problems, structures):
    M = structures["flat_rescaled"]
    basis = flat_kernel_basis(M, problems["flat_rescaled"].gauge["omega"])
    assert [b.verification.exact.kind for b in basis] == [PROVED] * 4
    with pytest.raises(NotModelReachable):
        flat_kernel_basis(M)


def test_flat_basis_requires_flat(structures):
    with pytest.raises(NotFlat):
        flat_kernel_basis(structures["example1"])


@given(st.tuples(*[st.integers(-3, 3)] * 4))
def test_flat_solutions_are_quadratics(c):
    flat = MobiusStructure.from_components(1, 0, 1, 0, 0, 0)
    s = simplify(P(f"{c[0]} + {c[1]}*x + {c[2]}*y + {c[3]}*(x^2+y^2)"))
    assert verify_solution(flat, s).exact.kind == PROVED


# ---------------------------------------------------------------- verification


def test_verify_rejects_non_solution(structures):
    rep = verify_solution(structures["example2"], P("exp(x)"))
    assert not rep.passed and rep.max_residual > 1
    assert rep.method == "jet"


def test_verify_reports_sign_changes(structures):
    rep = verify_solution(structures["flat"], P("x"))
    assert rep.passed and rep.sigma_zeros == 1


def test_lambda_of_scale(structures):
    assert equal(lambda_of(structures["flat"], P("-(x^2+y^2)/2")), P("1"))


def test_residuals_nonnegative(structures):
    rep = verify_solution(structures["example2"], P("1+x^2"))
    assert np.all(rep.residual[np.isfinite(rep.residual)] >= 0)


def test_kernel_reports_are_consistent(structures):
    expected = {
        "example1": (1, "Exact"),
        "example2": (0, "Exact"),
        "quartic": (0, "Exact"),
        "erf": (2, "Exact"),
        "airy": (2, "Exact"),
        "flat": (4, "Exact"),
    }
    for name, want in expected.items():
        rep = kernel_report(structures[name])
        assert (rep.dimension, rep.status) == want, name


def test_mixed_kernel_is_an_upper_bound():
    h = "(x+(x^2)^(1/2))^4"
    M = MobiusStructure.from_components(1, 0, 1, P(f"{h}*x*y"), P(f"{h}*(y^2-x^2)/2"), P(f"-{h}*x*y"))
    rep = kernel_report(M)
    assert (rep.dimension, rep.status) == (1, "UpperBound")


def test_verification_on_grid_shape(structures):
    rep = verify_solution(structures["example1"], P("exp((x^3+y^3)/3)"), grid=11)
    assert rep.points == 121 and rep.grid == 11
    assert all(itertools.starmap(lambda a, b: a <= b, [(rep.mean_residual, rep.max_residual)]))
