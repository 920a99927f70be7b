"""Symbolic core: expressions, parsing, exact normal form, derivatives,
numeric and Taylor-jet evaluation, and zero testing."""

from .canonical import Canonical, canonical, equal, simplify
from .diff import derivative, differentiate
from .expr import (
    ONE,
    ZERO,
    Expr,
    Func,
    Num,
    Sym,
    add,
    as_expr,
    free_symbols,
    func,
    mark_positive,
    mul,
    power,
    substitute,
)
from .integrate import antiderivative, numeric_line_integral, potential
from .jet import Jet, PoleError, eval_jet
from .numeric import EvaluationError, evaluate, lambdify
from .parser import ExprSyntaxError, ParseError, UnknownFunction, parse_expr
from .printer import to_text
from .zero import Domain, ZeroVerdict, is_zero

__all__ = [
    "Canonical", "canonical", "equal", "simplify", "derivative", "differentiate",
    "ONE", "ZERO", "Expr", "Func", "Num", "Sym", "add", "as_expr", "free_symbols",
    "func", "mark_positive", "mul", "power", "substitute", "antiderivative",
    "numeric_line_integral", "potential", "Jet", "PoleError", "eval_jet",
    "EvaluationError", "evaluate", "lambdify", "ExprSyntaxError", "ParseError",
    "UnknownFunction", "parse_expr", "to_text", "Domain", "ZeroVerdict", "is_zero",
]
