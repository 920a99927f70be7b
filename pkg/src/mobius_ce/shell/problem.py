"""Line-oriented problem files.

Example::

    # comments start with '#'
    [coords]
    x, y

    [constants]
    a = 1/2 positive

    [metric]
    g11 = 1
    g12 = 0
    g22 = 1

    [rho]
    P11 = -a - 2*a^2*x^2
    P12 = 0
    P22 = 2*a^2*x^2 + a

    [domain]
    x = 0.1, 1
    y = -1, 1
    exclude = x
    require = 2 - x^2 - y^2
    samples = 128

    [candidates]
    gaussian = exp(a*x^2)

    [curves]
    loop = 4*t*(1-t) - 1/2; (2*t-1)*4*t*(1-t)

    [gauge]
    omega = exp(x)

Coordinates whose lower bound is positive and constants marked
``positive`` are treated as positive symbols in exact computations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from ..mobius import MobiusStructure
from ..symcore import Expr, ParseError, parse_expr
from ..symcore.expr import BUILTIN_CONSTANTS, free_symbols, mark_positive
from ..symcore.zero import DEFAULT_SAMPLES, Domain
from ..tractor import Curve

SECTIONS = ("coords", "constants", "metric", "rho", "domain", "candidates", "curves", "gauge", "meta")
METRIC_KEYS = ("g11", "g12", "g22")
RHO_KEYS = ("P11", "P12", "P22")


class ProblemFileError(ParseError):
    def __init__(self, message: str, line: int | None = None, source: str = ""):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else (f"{source}: " if source else "")
        super().__init__(where + message)


@dataclass
class Problem:
    coords: tuple[str, str]
    constants: dict[str, float]
    positive: set[str]
    metric: dict[str, Expr]
    rho: dict[str, Expr]
    domain: Domain
    candidates: dict[str, Expr] = field(default_factory=dict)
    curves: dict[str, str] = field(default_factory=dict)
    gauge: dict[str, Expr] = field(default_factory=dict)
    name: str = ""
    source: str = ""

    def structure(self) -> MobiusStructure:
        m, r = self.metric, self.rho
        return MobiusStructure.from_components(
            m["g11"], m["g12"], m["g22"], r["P11"], r["P12"], r["P22"],
            domain=self.domain, coords=self.coords, name=self.name,
        )

    def expr(self, text: str, what: str = "expression") -> Expr:
        """Parse a command-line expression in the context of this problem."""
        try:
            e = parse_expr(text)
        except ParseError as exc:
            raise ProblemFileError(f"{what}: {exc}", source="<command line>") from exc
        _check_symbols(e, self._known(), what, None, "<command line>")
        return mark_positive(e, self.positive) if self.positive else e

    def curve(self, spec: str) -> Curve:
        spec = self.curves.get(spec, spec)
        try:
            c = Curve.parse(spec)
        except (ParseError, ValueError) as exc:
            raise ProblemFileError(f"curve: {exc}", source="<command line>") from exc
        if c.x is not None and self.constants:
            from ..symcore.expr import substitute
            from ..symcore import Num

            vals = {k: Num(Fraction(v).limit_denominator(10**12)) for k, v in self.constants.items()}
            c = Curve(substitute(c.x, vals), substitute(c.y, vals), c.param)
        return c

    def _known(self) -> set[str]:
        return set(self.coords) | set(self.constants) | set(BUILTIN_CONSTANTS)


def _check_symbols(e: Expr, known: set[str], what: str, line, source):
    unknown = free_symbols(e) - known
    if unknown:
        raise ProblemFileError(f"{what}: unknown symbol(s) {', '.join(sorted(unknown))}", line, source)


_HEADER = re.compile(r"^\[(\w+)\]$")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$|^[+-]?\d+/\d+$")


def _number(text: str, line: int, source: str) -> float:
    t = text.strip()
    if not _NUMBER.match(t):
        raise ProblemFileError(f"expected a number, got {t!r}", line, source)
    return float(Fraction(t))


def parse_problem(text: str, source: str = "<string>") -> Problem:
    section = None
    raw: dict[str, list[tuple[int, str, str]]] = {s: [] for s in SECTIONS}
    coords_line = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = _HEADER.match(stripped)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise ProblemFileError(f"unknown section [{section}]", lineno, source)
            continue
        if section is None:
            raise ProblemFileError("content before the first [section]", lineno, source)
        if section == "coords":
            coords_line = (lineno, stripped.split("=", 1)[-1])
            continue
        if "=" not in stripped:
            raise ProblemFileError("expected 'key = value'", lineno, source)
        key, value = (s.strip() for s in stripped.split("=", 1))
        raw[section].append((lineno, key, value))

    if coords_line is None:
        raise ProblemFileError("missing [coords] section", None, source)
    names = tuple(n.strip() for n in coords_line[1].split(",") if n.strip())
    if len(names) != 2 or len(set(names)) != 2 or not all(n.isidentifier() for n in names):
        raise ProblemFileError("[coords] must list two distinct names", coords_line[0], source)

    constants: dict[str, float] = {}
    positive: set[str] = set()
    for lineno, key, value in raw["constants"]:
        parts = value.split()
        if not parts:
            raise ProblemFileError(f"constant {key} has no value", lineno, source)
        constants[key] = _number(parts[0], lineno, source)
        flags = parts[1:]
        for fl in flags:
            if fl != "positive":
                raise ProblemFileError(f"unknown constant flag {fl!r}", lineno, source)
            if constants[key] <= 0:
                raise ProblemFileError(f"constant {key} declared positive but bound to {constants[key]}", lineno, source)
            positive.add(key)

    bounds = {}
    excl_text, req_text = [], []
    samples = DEFAULT_SAMPLES
    for lineno, key, value in raw["domain"]:
        if key in names:
            lo_hi = value.split(",")
            if len(lo_hi) != 2:
                raise ProblemFileError(f"bounds for {key} must be 'lo, hi'", lineno, source)
            lo, hi = (_number(v, lineno, source) for v in lo_hi)
            if not lo < hi:
                raise ProblemFileError(f"empty interval for {key}", lineno, source)
            bounds[key] = (lo, hi)
        elif key == "exclude":
            excl_text.append((lineno, value))
        elif key == "require":
            req_text.append((lineno, value))
        elif key == "samples":
            samples = int(_number(value, lineno, source))
        else:
            raise ProblemFileError(f"unknown domain key {key!r}", lineno, source)
    for n in names:
        bounds.setdefault(n, (-1.0, 1.0))
        if bounds[n][0] > 0:
            positive.add(n)

    known = set(names) | set(constants) | set(BUILTIN_CONSTANTS)

    def ex(lineno: int, value: str, what: str) -> Expr:
        try:
            e = parse_expr(value)
        except ParseError as exc:
            raise ProblemFileError(f"{what}: {exc}", lineno, source) from exc
        _check_symbols(e, known, what, lineno, source)
        return mark_positive(e, positive) if positive else e

    def table(sec: str, keys) -> dict[str, Expr]:
        out = {}
        for lineno, key, value in raw[sec]:
            if key not in keys:
                raise ProblemFileError(f"unknown key {key!r} in [{sec}]", lineno, source)
            if key in out:
                raise ProblemFileError(f"duplicate key {key!r}", lineno, source)
            out[key] = ex(lineno, value, key)
        missing = [k for k in keys if k not in out]
        if missing:
            raise ProblemFileError(f"[{sec}] is missing {', '.join(missing)}", None, source)
        return out

    metric = table("metric", METRIC_KEYS)
    rho = table("rho", RHO_KEYS)
    domain = Domain(
        coords=names,
        bounds=(bounds[names[0]], bounds[names[1]]),
        exclude=tuple(ex(ln, v, "exclude") for ln, v in excl_text),
        require=tuple(ex(ln, v, "require") for ln, v in req_text),
        constants=tuple(sorted(constants.items())),
        samples=samples,
    )
    candidates = {key: ex(ln, v, key) for ln, key, v in raw["candidates"]}
    curves = {}
    for ln, key, v in raw["curves"]:
        try:
            Curve.parse(v)
        except (ParseError, ValueError) as exc:
            raise ProblemFileError(f"curve {key}: {exc}", ln, source) from exc
        curves[key] = v
    gauge = {}
    for ln, key, v in raw["gauge"]:
        if key != "omega":
            raise ProblemFileError(f"unknown key {key!r} in [gauge]", ln, source)
        gauge[key] = ex(ln, v, key)
    name = ""
    for ln, key, v in raw["meta"]:
        if key == "name":
            name = v
    if not name:
        name = Path(source).stem if source and not source.startswith("<") else ""
    return Problem(names, constants, positive, metric, rho, domain, candidates, curves, gauge, name, source)


def load_problem(path) -> Problem:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read {p}: {exc.strerror}", None, str(p)) from exc
    return parse_problem(text, str(p))


FIXTURES = ("example1", "example2", "quartic", "erf", "airy", "flat", "flat_rescaled")


def fixture_path(name: str) -> Path:
    p = resources.files("mobius_ce") / "fixtures" / f"{name}.mob"
    return Path(str(p))


def load_fixture(name: str) -> Problem:
    return load_problem(fixture_path(name))
