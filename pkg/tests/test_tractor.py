from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobius_ce.einstein import flat_kernel_basis, generic_obstruction, generic_k_form
from mobius_ce.geom import ConformalRescale
from mobius_ce.mobius import MobiusStructure
from mobius_ce.symcore import differentiate, equal, is_zero, parse_expr, simplify
from mobius_ce.symcore.canonical import canonical
from mobius_ce.tractor import (
    ConnectionKind,
    Curve,
    DomainExit,
    GaugeMismatch,
    TractorSection,
    apply_connection,
    constraint_residuals,
    metric_compatibility_defect,
    parallel_transport,
    rescale_section,
    tractor_from_scale,
    tractor_metric,
)
from conftest import RATIONAL_FIXTURES
from strategies import small_polynomials

P = parse_expr

SECTIONS = [
    ("1+x+y^2", "x*y", "y", "x"),
    ("x*y", "1", "x^2-y", "y^3"),
    ("0", "x", "y", "1+x*y"),
]
LOOP = "4*t*(1-t) - 1/2; (2*t-1)*4*t*(1-t)"
# stays inside the annulus that bounds the second example
ARC = "1 - t/5; 3*t/5"


def _section(comps, M):
    return TractorSection(*(P(c) for c in comps), gauge=M.gauge)


def _zero(e):
    return canonical(e).is_zero


# ---------------------------------------------------------------- connection difference


@pytest.mark.parametrize(
    "name", ["example1", "example2", "quartic", "erf", "airy", "flat", "flat_rescaled"]
)
def test_connection_difference_is_half_u_sigma(structures, name):
    M = structures[name]
    sections = [_section(c, M) for c in SECTIONS] + [tractor_from_scale(M, P("1+x^2"))]
    U = M.inv.U
    for T in sections:
        a = apply_connection(M, "prolongation", T)
        b = apply_connection(M, "standard", T)
        for i in range(2):
            assert _zero(a.top[i] - b.top[i])
            assert all(_zero(a.middle[i, j] - b.middle[i, j]) for j in range(2))
            assert _zero(a.bottom[i] - b.bottom[i] - Fraction(1, 2) * U[i] * T.sigma)


def test_kinds_agree_when_sigma_vanishes(structures):
    M = structures["example2"]
    T = _section(("0", "x^2", "x*y", "y"), M)
    a = apply_connection(M, ConnectionKind.PROLONGATION, T)
    b = apply_connection(M, ConnectionKind.STANDARD, T)
    assert all(_zero(p - q) for p, q in zip(a.exprs(), b.exprs()))


def test_example1_solution_section_is_prolongation_parallel(structures):
    M = structures["example1"]
    T = tractor_from_scale(M, P("exp((x^3+y^3)/3)"))
    assert apply_connection(M, "prolongation", T).is_exact_zero()
    std = apply_connection(M, "standard", T)
    assert not _zero(std.bottom[0])
    for a in range(2):
        assert _zero(std.bottom[a] + Fraction(1, 2) * M.inv.U[a] * T.sigma)


def test_flat_linear_scale_is_parallel(structures):
    M = structures["flat"]
    T = tractor_from_scale(M, P("x"))
    for kind in ConnectionKind:
        assert apply_connection(M, kind, T).is_exact_zero()


# ---------------------------------------------------------------- tractor metric


@pytest.mark.parametrize("name", RATIONAL_FIXTURES)
def test_metric_compatibility_on_rational_fixtures(structures, name):
    M = structures[name]
    for comps in SECTIONS:
        defect = metric_compatibility_defect(M, _section(comps, M), kind="standard")
        assert all(_zero(d) for d in defect)


@settings(max_examples=20)
@given(st.lists(small_polynomials, min_size=8, max_size=8))
def test_metric_compatibility_for_pairs(comps):
    M = MobiusStructure.from_components(1, 0, 1, P("x*y"), P("(y^2-x^2)/2"), P("-x*y"))
    S = TractorSection(*comps[:4])
    T = TractorSection(*comps[4:])
    dS = apply_connection(M, "standard", S)
    dT = apply_connection(M, "standard", T)
    hST = tractor_metric(M, S, T)
    for a in range(2):
        lhs = differentiate(hST, M.coords[a])
        rhs = tractor_metric(M, dS.slot(a), T) + tractor_metric(M, S, dT.slot(a))
        assert equal(lhs, rhs)


def test_tractor_metric_values(structures):
    M = structures["flat"]
    T = _section(("2", "1", "3", "5"), M)
    assert equal(tractor_metric(M, T, T), P("30"))


# ---------------------------------------------------------------- constraints


def test_example1_constraints_vanish(structures):
    M = structures["example1"]
    T = tractor_from_scale(M, P("exp((x^3+y^3)/3)"))
    assert all(_zero(r) for r in constraint_residuals(M, T))


def test_flat_constraints_vanish(structures):
    M = structures["flat"]
    T = _section(SECTIONS[0], M)
    assert all(_zero(r) for r in constraint_residuals(M, T))


def test_example2_false_candidate(structures):
    # mu_a = K_a sigma solves the first constraint but not E_ab
    M = structures["example2"]
    K = generic_k_form(M)
    s = P("1")
    T = TractorSection(s, K[0], K[1], P("0"), M.gauge)
    r1, _ = constraint_residuals(M, T)
    assert is_zero(r1, M.domain).is_zero
    assert generic_obstruction(M).E_verdict.is_nonzero


# ---------------------------------------------------------------- rescaling sections


def test_unit_rescale_is_identity(structures):
    M = structures["example2"]
    T = _section(SECTIONS[0], M)
    Th = rescale_section(T, ConformalRescale(P("1")), M)
    assert all(equal(a, b) for a, b in zip(Th.components(), T.components()))


def test_bottom_slot_section_is_unchanged(structures):
    M = structures["flat"]
    T = _section(("0", "0", "0", "1"), M)
    Th = rescale_section(T, ConformalRescale(P("exp(x)")), M)
    omega = P("exp(x)")
    assert [str(c) for c in Th.components()[:3]] == ["0", "0", "0"]
    assert equal(Th.Lambda, simplify(omega ** -1))


@pytest.mark.parametrize("name", ["example1", "quartic", "flat"])
@pytest.mark.parametrize("omega", ["exp(x)", "1+x^2+y^2"])
def test_rescale_commutes_with_tractor_from_scale(structures, name, omega):
    M = structures[name]
    r = ConformalRescale(P(omega))
    sigma = P("1+x^2+y^4")
    a = rescale_section(tractor_from_scale(M, sigma), r, M)
    Mh = M.rescaled(r.omega)
    b = tractor_from_scale(Mh, simplify(r.omega * sigma))
    rng = np.random.default_rng(5)
    for x, y in rng.uniform(-0.9, 0.9, (6, 2)):
        assert np.allclose(a.at(M, x, y), b.at(Mh, x, y), rtol=1e-10, atol=1e-12)


def test_gauge_mismatch(structures):
    M = structures["flat"]
    T = TractorSection(P("1"), P("0"), P("0"), P("0"), gauge="other")
    with pytest.raises(GaugeMismatch):
        rescale_section(T, ConformalRescale(P("2")), M)


def test_numeric_rescale_needs_a_point(structures):
    M = structures["flat"]
    T = TractorSection(1.0, 0.0, 0.0, 0.0, M.gauge)
    with pytest.raises(ValueError):
        rescale_section(T, ConformalRescale(P("2")), M)


# ---------------------------------------------------------------- curves


def test_curve_parse():
    c = Curve.parse("cos(t); sin(t)")
    x, y, vx, vy = c.evaluate(np.array([0.0, 0.5]))
    assert np.allclose(x, np.cos([0, 0.5])) and np.allclose(vy, np.cos([0, 0.5]))
    p = Curve.parse("poly: 0,0; 1,0; 1,1")
    assert len(p.segments()) == 2
    with pytest.raises(ValueError):
        Curve.parse("t")
    with pytest.raises(ValueError):
        Curve.polyline([(0, 0)])


def test_curve_leaving_domain(structures):
    M = structures["example1"]
    with pytest.raises(DomainExit):
        parallel_transport(M, "standard", (1.0, 0, 0, 0), Curve.parse("3*t; 0"))


def test_bad_initial_section(structures):
    with pytest.raises(ValueError):
        parallel_transport(structures["flat"], "standard", (1.0, float("nan"), 0, 0), Curve.parse("t; t"))


# ---------------------------------------------------------------- transport


def test_flat_transport_of_constant_scale(structures):
    M = structures["flat"]
    res = parallel_transport(M, "standard", (1.0, 0.0, 0.0, 0.0), Curve.parse(LOOP))
    assert np.allclose(res.endpoint, [1, 0, 0, 0], atol=1e-12)


def _start_end(curve, M):
    seg = curve.segments()
    x0, y0, _, _ = seg[0].evaluate(np.array([0.0]), M.constants)
    x1, y1, _, _ = seg[-1].evaluate(np.array([1.0]), M.constants)
    return (x0[0], y0[0]), (x1[0], y1[0])


@pytest.mark.parametrize(
    "spec",
    ["(cos(t*pi/2) + 1)/2 - 1/2; sin(t*pi/2)/2", "poly: -0.5,-0.5; 0.5,-0.5; 0.5,0.5", LOOP],
)
def test_example1_transport_follows_solution(structures, spec):
    M = structures["example1"]
    T = tractor_from_scale(M, P("exp((x^3+y^3)/3)"))
    curve = Curve.parse(spec)
    a, b = _start_end(curve, M)
    res = parallel_transport(M, "prolongation", T.at(M, *a), curve)
    expected = T.at(M, *b)
    assert np.linalg.norm(res.endpoint - expected) <= 1e-8 * np.linalg.norm(expected)


def test_example1_loop_order(structures):
    M = structures["example1"]
    T = tractor_from_scale(M, P("exp((x^3+y^3)/3)"))
    T0 = T.at(M, -0.5, 0.0)
    res = parallel_transport(M, "prolongation", T0, Curve.parse(LOOP), rtol=1e-10)
    assert np.linalg.norm(res.endpoint - T0) <= 1e-8 * np.linalg.norm(T0)
    assert 3.5 <= res.order_estimate <= 4.5


@pytest.mark.parametrize("name", ["example2", "erf", "airy"])
def test_transport_is_linear(structures, name):
    M = structures[name]
    curve = Curve.parse(ARC if name == "example2" else "0.2 + 0.3*t; 0.4*t - 0.1")
    rng = np.random.default_rng(11)
    A, B = rng.normal(size=(2, 4))
    alpha, beta = 1.7, -0.4
    ta = parallel_transport(M, "prolongation", A, curve, rtol=1e-12).endpoint
    tb = parallel_transport(M, "prolongation", B, curve, rtol=1e-12).endpoint
    tc = parallel_transport(M, "prolongation", alpha * A + beta * B, curve, rtol=1e-12).endpoint
    assert np.linalg.norm(tc - (alpha * ta + beta * tb)) <= 1e-9 * max(1.0, np.linalg.norm(tc))


@pytest.mark.parametrize("name", ["example1", "example2", "quartic"])
@pytest.mark.parametrize("kind", ["standard", "prolongation"])
def test_transport_gauge_equivariance(structures, name, kind):
    M = structures[name]
    r = ConformalRescale(P("1+x^2+y^2"))
    Mh = M.rescaled(r.omega)
    curve = Curve.parse(ARC if name == "example2" else "0.3*t - 0.2; 0.5*t*(1-t) + 0.1")
    a, b = _start_end(curve, M)
    T0 = TractorSection(0.8, -0.3, 0.5, 1.1, M.gauge)
    end = parallel_transport(M, kind, T0, curve, rtol=1e-12).endpoint
    end_h = rescale_section(TractorSection(*end, gauge=M.gauge), r, M, point=b).components()
    T0h = rescale_section(T0, r, M, point=a)
    got = parallel_transport(Mh, kind, T0h, curve, rtol=1e-12).endpoint
    assert np.linalg.norm(got - np.array(end_h)) <= 1e-8 * np.linalg.norm(end_h)


def test_flat_correspondence(structures, problems):
    for name in ("flat", "flat_rescaled"):
        M = structures[name]
        for el in flat_kernel_basis(M, problems[name].gauge.get("omega")):
            assert apply_connection(M, "standard", tractor_from_scale(M, el.sigma)).is_exact_zero()
