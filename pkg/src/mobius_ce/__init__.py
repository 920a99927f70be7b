"""Möbius surfaces, Cotton–York invariants and conformal-to-Einstein scales."""

__version__ = "0.1.0"

from .einstein import flat_kernel_basis, generic_obstruction, kernel_report, ode_reduce, verify_solution
from .mobius import MobiusStructure, classify, invariants, validate
from .symcore import Domain, parse_expr

__all__ = [
    "__version__",
    "Domain",
    "MobiusStructure",
    "classify",
    "flat_kernel_basis",
    "generic_obstruction",
    "invariants",
    "kernel_report",
    "ode_reduce",
    "parse_expr",
    "validate",
    "verify_solution",
]
