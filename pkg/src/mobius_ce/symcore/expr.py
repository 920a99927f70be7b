"""Immutable expression trees over named symbols.

Nodes are hashable and compare structurally.  The smart constructors
(:func:`add`, :func:`mul`, :func:`power`, :func:`func`) perform only cheap,
always-valid rewrites; the exact normal form lives in :mod:`.canonical`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

BUILTIN_FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "erf", "airy_ai", "airy_bi")
# derivatives of the Airy functions; needed so that differentiation stays closed
DERIVATIVE_FUNCTIONS = ("airy_aip", "airy_bip")
ALL_FUNCTIONS = BUILTIN_FUNCTIONS + DERIVATIVE_FUNCTIONS

BUILTIN_CONSTANTS = {"pi": math.pi, "sqrt_pi": math.sqrt(math.pi)}

Number = Union[int, Fraction]


class Expr:
    __slots__ = ("_hash",)

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __pow__(self, other):
        return power(self, Fraction(other))

    def __neg__(self):
        return neg(self)

    def __hash__(self):
        return self._hash

    def __str__(self):
        from .printer import to_text

        return to_text(self)

    def __repr__(self):
        return f"Expr({self})"

    def __reduce__(self):
        # pickling via the textual form keeps nodes immutable
        from .printer import to_text

        return (_rebuild, (to_text(self), sorted(positive_symbols(self))))


def _rebuild(text, positives):
    from .parser import parse_expr

    e = parse_expr(text)
    return mark_positive(e, positives) if positives else e


class Num(Expr):
    __hash__ = Expr.__hash__
    __slots__ = ("value",)

    def __init__(self, value: Number):
        self.value = Fraction(value)
        self._hash = hash(("num", self.value))

    def __eq__(self, other):
        return isinstance(other, Num) and other.value == self.value


class Sym(Expr):
    __hash__ = Expr.__hash__
    __slots__ = ("name", "positive")

    def __init__(self, name: str, positive: bool = False):
        self.name = name
        self.positive = positive
        self._hash = hash(("sym", name))

    def __eq__(self, other):
        return isinstance(other, Sym) and other.name == self.name and other.positive == self.positive


class Add(Expr):
    __hash__ = Expr.__hash__
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        self.terms = terms
        self._hash = hash(("add", terms))

    def __eq__(self, other):
        return isinstance(other, Add) and other._hash == self._hash and other.terms == self.terms


class Mul(Expr):
    __hash__ = Expr.__hash__
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        self.factors = factors
        self._hash = hash(("mul", factors))

    def __eq__(self, other):
        return isinstance(other, Mul) and other._hash == self._hash and other.factors == self.factors


class Pow(Expr):
    __hash__ = Expr.__hash__
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Fraction):
        self.base = base
        self.exp = Fraction(exp)
        self._hash = hash(("pow", base, self.exp))

    def __eq__(self, other):
        return (
            isinstance(other, Pow)
            and other._hash == self._hash
            and other.exp == self.exp
            and other.base == self.base
        )


class Func(Expr):
    __hash__ = Expr.__hash__
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in ALL_FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg
        self._hash = hash(("func", name, arg))

    def __eq__(self, other):
        return (
            isinstance(other, Func)
            and other._hash == self._hash
            and other.name == self.name
            and other.arg == self.arg
        )


ZERO = Num(0)
ONE = Num(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Num(value)
    if isinstance(value, float):
        return Num(Fraction(value).limit_denominator(10**12))
    if isinstance(value, str):
        from .parser import parse_expr

        return parse_expr(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def sym(name: str, positive: bool = False) -> Sym:
    return Sym(name, positive)


def num(value) -> Num:
    return Num(Fraction(value))


def _split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    if isinstance(e, Num):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Num):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def add(*terms: Expr) -> Expr:
    collected: dict[Expr, Fraction] = {}
    constant = Fraction(0)
    stack = list(terms)
    flat = []
    while stack:
        t = stack.pop(0)
        if isinstance(t, Add):
            stack[0:0] = list(t.terms)
        else:
            flat.append(t)
    for t in flat:
        if isinstance(t, Num):
            constant += t.value
            continue
        c, rest = _split_coeff(t)
        collected[rest] = collected.get(rest, Fraction(0)) + c
    out = []
    for rest, c in collected.items():
        if c == 0:
            continue
        out.append(rest if c == 1 else mul(Num(c), rest))
    if constant != 0:
        out.append(Num(constant))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def is_positive(e: Expr) -> bool:
    """Cheap syntactic sign test: true only when ``e >= 0`` wherever defined.

    Sufficient for merging real powers, ``(b^r)^s = b^(r*s)``.
    """
    if isinstance(e, Num):
        return e.value > 0
    if isinstance(e, Sym):
        return e.positive or e.name in BUILTIN_CONSTANTS
    if isinstance(e, Func):
        return e.name == "exp"
    if isinstance(e, Pow):
        return is_positive(e.base) or (e.exp.denominator == 1 and e.exp.numerator % 2 == 0)
    if isinstance(e, Mul):
        return all(is_positive(f) for f in e.factors)
    if isinstance(e, Add):
        return all(is_positive(t) for t in e.terms)
    return False


def mul(*factors: Expr) -> Expr:
    coeff = Fraction(1)
    bases: dict[Expr, Fraction] = {}
    stack = list(factors)
    flat = []
    while stack:
        f = stack.pop(0)
        if isinstance(f, Mul):
            stack[0:0] = list(f.factors)
        else:
            flat.append(f)
    for f in flat:
        if isinstance(f, Num):
            coeff *= f.value
            if coeff == 0:
                return ZERO
            continue
        if isinstance(f, Pow):
            b, e = f.base, f.exp
        else:
            b, e = f, Fraction(1)
        # b^r * b^s = b^(r+s) wherever both sides are real (odd-root convention)
        bases[b] = bases.get(b, Fraction(0)) + e
    out: list[Expr] = []
    for b, e in bases.items():
        if e == 0:
            continue
        p = power(b, e)
        if isinstance(p, Num):
            coeff *= p.value
        elif isinstance(p, Mul):
            c, rest = _split_coeff(p)
            coeff *= c
            out.extend(rest.factors if isinstance(rest, Mul) else [rest])
        else:
            out.append(p)
    if coeff == 0:
        return ZERO
    if not out:
        return Num(coeff)
    if coeff != 1:
        out.insert(0, Num(coeff))
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


def neg(e: Expr) -> Expr:
    return mul(Num(-1), e)


def _int_root(n: int, q: int) -> int | None:
    if n < 0:
        return None
    r = round(n ** (1.0 / q)) if n > 0 else 0
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == n:
            return cand
    return None


def rational_root(c: Fraction, q: int) -> Fraction | None:
    """Exact ``c**(1/q)`` for rational ``c > 0`` when it is rational, else None."""
    if c <= 0:
        return None
    a = _int_root(c.numerator, q)
    b = _int_root(c.denominator, q)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def power(base: Expr, exponent) -> Expr:
    e = Fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Num):
        v = base.value
        if e.denominator == 1:
            if v == 0 and e < 0:
                raise ZeroDivisionError("division by zero")
            return Num(v ** e.numerator)
        if v == 0:
            return ZERO if e > 0 else Pow(base, e)
        if v > 0:
            r = rational_root(v, e.denominator)
            if r is not None:
                return Num(r ** e.numerator)
        return Pow(base, e)
    if isinstance(base, Pow):
        if e.denominator == 1 or is_positive(base.base):
            return power(base.base, base.exp * e)
        return Pow(base, e)
    if isinstance(base, Func) and base.name == "exp" and e.denominator != 1:
        return func("exp", mul(Num(e), base.arg))
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*[power(f, e) for f in base.factors])
    if isinstance(base, Mul) and isinstance(base.factors[0], Num) and base.factors[0].value > 0:
        # peel a positive numeric coefficient off a fractional power
        c = base.factors[0]
        rest = base.factors[1:]
        return mul(power(c, e), power(rest[0] if len(rest) == 1 else Mul(rest), e))
    return Pow(base, e)


def func(name: str, arg: Expr) -> Expr:
    if name == "sqrt":
        return power(arg, Fraction(1, 2))
    if name == "exp":
        if arg == ZERO:
            return ONE
        if isinstance(arg, Func) and arg.name == "log":
            return arg.arg
    elif name == "log":
        if arg == ONE:
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
    elif name in ("sin", "erf"):
        if arg == ZERO:
            return ZERO
    elif name == "cos":
        if arg == ZERO:
            return ONE
    return Func(name, arg)


def iter_nodes(e: Expr) -> Iterable[Expr]:
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        yield n
        stack.extend(children(n))


def children(e: Expr) -> tuple:
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Func):
        return (e.arg,)
    return ()


def free_symbols(e: Expr) -> set[str]:
    return {n.name for n in iter_nodes(e) if isinstance(n, Sym)}


def positive_symbols(e: Expr) -> set[str]:
    return {n.name for n in iter_nodes(e) if isinstance(n, Sym) and n.positive}


def depends_on(e: Expr, name: str) -> bool:
    return any(isinstance(n, Sym) and n.name == name for n in iter_nodes(e))


def has_functions(e: Expr) -> bool:
    return any(isinstance(n, Func) for n in iter_nodes(e))


def is_rational(e: Expr) -> bool:
    """True when ``e`` is a rational function of its symbols."""
    for n in iter_nodes(e):
        if isinstance(n, Func):
            return False
        if isinstance(n, Pow) and n.exp.denominator != 1:
            return False
    return True


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace symbols by name; rebuilt through the smart constructors."""
    cache: dict[Expr, Expr] = {}

    def go(n: Expr) -> Expr:
        if n in cache:
            return cache[n]
        if isinstance(n, Sym):
            out = mapping.get(n.name, n)
        elif isinstance(n, Num):
            out = n
        elif isinstance(n, Add):
            out = add(*[go(t) for t in n.terms])
        elif isinstance(n, Mul):
            out = mul(*[go(f) for f in n.factors])
        elif isinstance(n, Pow):
            out = power(go(n.base), n.exp)
        else:
            out = func(n.name, go(n.arg))
        cache[n] = out
        return out

    return go(e)


def mark_positive(e: Expr, names) -> Expr:
    names = set(names)
    return substitute(e, {n: Sym(n, positive=True) for n in names})
