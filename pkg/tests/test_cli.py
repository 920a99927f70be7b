import json
import subprocess
import sys

import jsonschema
import pytest

from mobius_ce.shell import FIXTURES, ProblemFileError, fixture_path, load_fixture, parse_problem
from mobius_ce.shell.cli import main
from mobius_ce.shell.report import load_schema
from mobius_ce.symcore import equal, parse_expr

FLAT = fixture_path("flat").read_text()


def run_json(capsys, *argv):
    code = main([*argv, "--json", "-"])
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture(scope="module")
def validator():
    schema = load_schema()
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def write(tmp_path, text, name="p.mob"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------- problem files


def test_fixtures_parse():
    for name in FIXTURES:
        p = load_fixture(name)
        assert p.name == name
        assert set(p.metric) == {"g11", "g12", "g22"}


def test_constants_and_positive_coordinates():
    p = load_fixture("erf")
    assert p.constants["a"] == 0.5
    assert "a" in p.positive and "x" in p.positive


def test_missing_component_is_a_parse_error():
    with pytest.raises(ProblemFileError):
        parse_problem(FLAT.replace("g22 = 1\n", ""))


def test_unknown_symbol_is_a_parse_error():
    with pytest.raises(ProblemFileError) as info:
        parse_problem(FLAT.replace("P11 = 0", "P11 = z"))
    assert info.value.line is not None


def test_curve_lookup():
    p = load_fixture("example1")
    c = p.curve("loop")
    assert equal(c.x, parse_expr("4*t*(1-t) - 1/2"))


# ---------------------------------------------------------------- exit codes


def test_fixtures_command(capsys):
    assert main(["fixtures"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in FIXTURES)


def test_analyze_exit_zero_with_obstruction(capsys):
    assert main(["analyze", "fixture:example2"]) == 0
    out = capsys.readouterr().out
    assert "kernel: 0" in out


@pytest.mark.parametrize(
    "old, new",
    [
        ("g11 = 1\ng12 = 0\ng22 = 1", "g11 = 1\ng12 = 1\ng22 = 1"),  # degenerate
        ("P11 = 0", "P11 = 1"),  # trace is not the curvature
    ],
)
def test_invalid_structure_exits_two(tmp_path, capsys, old, new):
    assert main(["analyze", write(tmp_path, FLAT.replace(old, new))]) == 2


def test_invalid_structure_report_validates(tmp_path, capsys, validator):
    code, rep = run_json(capsys, "analyze", write(tmp_path, FLAT.replace("P11 = 0", "P11 = 1")))
    assert code == 2 and rep["validation"]["passed"] is False
    validator.validate(rep)


@pytest.mark.parametrize(
    "text",
    [
        FLAT.replace("g22 = 1\n", ""),
        FLAT.replace("P11 = 0", "P11 = (x +"),
        FLAT.replace("P11 = 0", "P11 = gamma(x)"),
        FLAT.replace("[rho]", "[stuff]"),
    ],
)
def test_parse_errors_exit_three(tmp_path, capsys, text):
    assert main(["analyze", write(tmp_path, text)]) == 3
    assert "parse error" in capsys.readouterr().err


def test_unknown_fixture_exits_three(capsys):
    assert main(["analyze", "fixture:nope"]) == 3


def test_bad_sigma_exits_three(capsys):
    assert main(["verify", "fixture:flat", "--sigma", "1 + q"]) == 3


def test_nonpositive_omega_exits_two(capsys):
    assert main(["rescale-check", "fixture:flat", "--omega", "x"]) == 2


def test_transport_leaving_domain_exits_one(capsys):
    assert main(["transport", "fixture:flat", "--init", "1,0,0,0", "--curve", "3*t; 0"]) == 1


# ---------------------------------------------------------------- reports


@pytest.mark.parametrize("name", FIXTURES)
def test_analyze_reports_validate(capsys, validator, name):
    code, rep = run_json(capsys, "analyze", f"fixture:{name}")
    assert code == 0
    validator.validate(rep)
    assert rep["command"] == "analyze" and rep["problem"]["name"] == name


def test_analyze_verdicts(capsys):
    _, r1 = run_json(capsys, "analyze", "fixture:example1")
    assert r1["classification"]["label"] == "Generic"
    assert r1["generic"]["E_vanishes"]["verdict"] == "ProvedZero"
    assert equal(parse_expr(r1["reconstruction"]["sigma"]), parse_expr("exp((x^3+y^3)/3)"))
    assert (r1["kernel"]["dimension"], r1["kernel"]["status"]) == (1, "Exact")

    _, rq = run_json(capsys, "analyze", "fixture:quartic")
    assert rq["classification"]["label"] == "NonGeneric"
    assert equal(parse_expr(rq["nongeneric"]["k_plus_f_mu"]), parse_expr("4*x*y^3 - 4*x^3*y"))
    assert rq["kernel"]["dimension"] == 0

    _, ra = run_json(capsys, "analyze", "fixture:airy")
    assert ra["ode"]["ode"] == "xi'' - x*xi = 0"
    assert (ra["kernel"]["dimension"], ra["kernel"]["status"]) == (2, "Exact")


def test_verdicts_carry_evidence(capsys):
    _, rep = run_json(capsys, "analyze", "fixture:example2")
    v = rep["generic"]["E_vanishes"]
    assert v["verdict"] == "NonZero" and len(v["witness"]) == 2
    x, y = v["witness"]
    assert 0.5 <= x * x + y * y <= 2


def test_verify_reports(capsys, validator):
    code, rep = run_json(capsys, "verify", "fixture:erf", "--sigma", "erf(sqrt(2*a)*x)*exp(a*x^2)")
    assert code == 0
    validator.validate(rep)
    assert rep["verification"]["passed"] and rep["verification"]["max_residual"] < 1e-8

    _, rep = run_json(capsys, "verify", "fixture:flat", "--sigma", "1 + x")
    assert rep["verification"]["exact"]["verdict"] == "ProvedZero"

    _, rep = run_json(capsys, "verify", "fixture:example2", "--sigma", "exp(x)")
    assert not rep["verification"]["passed"]


@pytest.mark.parametrize(
    "name, omega",
    [("flat", "1"), ("example1", "2"), ("quartic", "exp(x)"), ("erf", "1 + x^2")],
)
def test_rescale_check_reports(capsys, validator, name, omega):
    code, rep = run_json(capsys, "rescale-check", f"fixture:{name}", "--omega", omega)
    assert code == 0
    validator.validate(rep)
    assert rep["Y_abc_invariant"]["holds"]
    assert rep["classification"]["holds"]
    assert rep["weights"]["holds"]


def test_rescale_check_rho_weight(capsys):
    _, rep = run_json(capsys, "rescale-check", "fixture:example1", "--omega", "2")
    assert rep["constant_omega"] and rep["weights"]["checks"]["rho"]["weight"] == -6


def test_transport_reports(capsys, validator):
    code, rep = run_json(
        capsys, "transport", "fixture:example1", "--init", "exp((x^3+y^3)/3)", "--curve", "loop"
    )
    assert code == 0
    validator.validate(rep)
    assert rep["scale_section"]["relative_deviation"] < 1e-8
    assert 3.5 <= rep["result"]["order_estimate"] <= 4.5

    code, rep = run_json(capsys, "transport", "fixture:flat", "--kind", "standard", "--init", "1,0,0,0", "--curve", "loop")
    assert code == 0
    validator.validate(rep)
    assert rep["result"]["endpoint"] == pytest.approx([1, 0, 0, 0], abs=1e-12)


def test_json_to_file(tmp_path, capsys, validator):
    out = tmp_path / "r.json"
    assert main(["analyze", "fixture:flat", "--json", str(out)]) == 0
    assert "kernel: 4" in capsys.readouterr().out
    validator.validate(json.loads(out.read_text()))


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "mobius_ce", "fixtures"], capture_output=True, text=True, timeout=120
    )
    assert proc.returncode == 0 and "example1" in proc.stdout
