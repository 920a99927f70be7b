"""Problem files, reports and the ``mobius-ce`` command."""

from .problem import FIXTURES, Problem, ProblemFileError, fixture_path, load_fixture, load_problem, parse_problem

__all__ = ["FIXTURES", "Problem", "ProblemFileError", "fixture_path", "load_fixture", "load_problem", "parse_problem"]
