"""Exact normal form: reduced fractions of multivariate polynomials.

Every expression is mapped into the field of rational functions over QQ
whose generators are

* symbols (``x``, ``y``, named constants), replaced by ``t^L`` when the
  expression contains ``x^(p/L)``;
* opaque function applications (``exp(..)``, ``erf(..)``, ...) whose
  arguments are themselves canonicalized;
* roots ``B^(1/L)`` of bases that are not symbols, reduced with the
  relation ``(B^(1/L))^L = B``.

Two rational-only expressions are equal iff their canonical forms are equal.
With transcendental atoms, a zero canonical form is still a proof of
identical vanishing, but a non-zero form is not a proof of non-vanishing.
The polynomial arithmetic (gcd reduction, square-free decomposition) is
delegated to :mod:`sympy.polys`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm

from sympy.polys.domains import QQ
from sympy.polys.fields import field as _make_field
from sympy.polys.orderings import grlex

from .expr import (
    BUILTIN_CONSTANTS,
    ONE,
    ZERO,
    Add,
    Expr,
    Func,
    Mul,
    Num,
    Pow,
    Sym,
    add,
    func,
    is_positive,
    mul,
    power,
)
from .printer import to_text


@dataclass(frozen=True)
class Gen:
    kind: str  # 'sym' | 'atom' | 'root'
    key: str
    expr: Expr  # what the generator stands for
    positive: bool
    root: int = 1  # L: generator is (symbol or base)^(1/L)
    base: Expr | None = None  # for 'root': B in (B^(1/L))^L = B


def _sort_key(g: Gen):
    return ({"sym": 0, "atom": 1, "root": 2}[g.kind], g.key)


def _frac(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


class Canonical:
    """A reduced fraction ``num/den`` with monic ``den``."""

    __slots__ = ("field", "num", "den", "gens")

    def __init__(self, field, num, den, gens: tuple[Gen, ...]):
        self.field = field
        self.num = num
        self.den = den
        self.gens = gens

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_constant(self) -> bool:
        return self.num.is_ground and self.den.is_ground

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError("not a constant")
        return _frac(self.num.LC if self.num else 0) / _frac(self.den.LC)

    @property
    def is_rational(self) -> bool:
        """No atoms or roots occur (only a fraction of polynomials in symbols)."""
        used = self._used_gens()
        return all(g.kind == "sym" and g.root == 1 for g in used)

    def _used_gens(self) -> list[Gen]:
        used = set()
        for poly in (self.num, self.den):
            for monom in poly.monoms():
                used.update(i for i, e in enumerate(monom) if e)
        return [self.gens[i] for i in sorted(used)]

    def poly_to_expr(self, poly) -> Expr:
        terms = []
        for monom, coeff in poly.terms():
            factors = [Num(_frac(coeff))]
            for g, e in zip(self.gens, monom):
                if e:
                    factors.append(power(g.expr, e))
            terms.append(mul(*factors))
        return add(*terms) if terms else ZERO

    def to_expr(self) -> Expr:
        n = self.poly_to_expr(self.num)
        if self.den == 1:
            return n
        return mul(n, power(self.poly_to_expr(self.den), -1))

    @property
    def key(self) -> str:
        return to_text(self.to_expr())

    def __str__(self):
        return self.key

    def __repr__(self):
        return f"Canonical({self.key})"


# ---------------------------------------------------------------- preparation


@lru_cache(maxsize=65536)
def _prepare(e: Expr) -> Expr:
    """Rewrite fractional powers into root-generator form; canonicalize arguments."""
    if isinstance(e, (Num, Sym)):
        return e
    if isinstance(e, Add):
        return add(*[_prepare(t) for t in e.terms])
    if isinstance(e, Mul):
        return _merge_exp([_prepare(f) for f in e.factors])
    if isinstance(e, Pow):
        b = _prepare(e.base)
        if _is_exp(b):
            # exp(u)^r = exp(r u) for every real u
            return _prepare(func("exp", mul(Num(e.exp), b.arg)))
        if e.exp.denominator == 1:
            return power(b, e.exp)
        return _root_power(b, e.exp)
    if isinstance(e, Func):
        arg = simplify(e.arg)
        out = func(e.name, arg)
        if not isinstance(out, Func):
            return _prepare(out)
        return out
    raise TypeError(type(e))


def _is_exp(e: Expr) -> bool:
    return isinstance(e, Func) and e.name == "exp"


def _merge_exp(factors: list[Expr]) -> Expr:
    """Combine the exponential factors of a product into one application."""
    exps = [f for f in factors if _is_exp(f)]
    if len(exps) < 2:
        return mul(*factors)
    rest = [f for f in factors if not _is_exp(f)]
    merged = func("exp", simplify(add(*[f.arg for f in exps])))
    return mul(*rest, merged)


def _poly_positive(c: Canonical, poly) -> bool:
    """Sufficient test that a polynomial is > 0 wherever its generators are defined."""
    strict = False
    for monom, coeff in poly.terms():
        if coeff <= 0:
            return False
        all_pos = True
        for g, e in zip(c.gens, monom):
            if e == 0:
                continue
            if not g.positive:
                all_pos = False
                if e % 2:
                    return False
        strict = strict or all_pos
    return strict


def _root_power(b: Expr, r: Fraction) -> Expr:
    cb = canonical(b)
    if cb.is_zero:
        if r > 0:
            return ZERO
        raise ZeroDivisionError("negative power of zero")
    pieces: list[Expr] = []
    residual: list[Expr] = []
    content = Fraction(1)
    for sign, poly in ((1, cb.num), (-1, cb.den)):
        # monomial content first; square-free decomposition of the rest
        monoms = poly.monoms()
        low = [min(m[i] for m in monoms) for i in range(len(cb.gens))]
        for g, k in zip(cb.gens, low):
            if k:
                ex = sign * k * r
                if g.positive or (ex.denominator == 1 and ex.numerator % 2 == 0):
                    pieces.append(power(g.expr, ex))
                else:
                    residual.append(power(g.expr, sign * k))
        shift = cb.field.ring({tuple(low): 1})
        rest = poly.exquo(shift) if any(low) else poly
        coeff, factors = rest.sqf_list()
        c = _frac(coeff)
        content *= c if sign == 1 else 1 / c
        for f, m in factors:
            fe = cb.poly_to_expr(f)
            ex = sign * m * r
            if _poly_positive(cb, f) or (ex.denominator == 1 and ex.numerator % 2 == 0):
                pieces.append(power(fe, ex))
            else:
                residual.append(power(fe, sign * m))
    if content > 0:
        whole = r.numerator // r.denominator
        frac_part = r - whole
        pieces.append(Num(content**whole))
        pieces.append(power(Num(content), frac_part))
    else:
        residual.append(Num(content))
    if residual:
        base = simplify(mul(*residual))
        if isinstance(base, Num) and base.value == 1:
            pass
        else:
            # x^(p/q) on a sign-unknown base: keep as a root generator of the base
            pieces.append(Pow(base, r) if not isinstance(base, Sym) else Pow(base, r))
    return mul(*pieces)


# ---------------------------------------------------------------- generators


def _collect(e: Expr, syms: dict, atoms: dict, roots: dict, seen: set) -> None:
    stack = [e]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        if isinstance(n, Num):
            continue
        if isinstance(n, Sym):
            s = syms.setdefault(n.name, [1, n])
            if n.positive:
                s[1] = n
        elif isinstance(n, Add):
            stack.extend(n.terms)
        elif isinstance(n, Mul):
            stack.extend(n.factors)
        elif isinstance(n, Pow):
            if n.exp.denominator == 1:
                stack.append(n.base)
            elif isinstance(n.base, Sym):
                s = syms.setdefault(n.base.name, [1, n.base])
                s[0] = lcm(s[0], n.exp.denominator)
                if n.base.positive:
                    s[1] = n.base
            else:
                roots[n.base] = lcm(roots.get(n.base, 1), n.exp.denominator)
                stack.append(n.base)
        elif isinstance(n, Func):
            atoms[n] = True


def _gens_for(e: Expr) -> list[Gen]:
    syms: dict = {}
    atoms: dict = {}
    roots: dict = {}
    _collect(e, syms, atoms, roots, set())
    gens = []
    for name, (L, s) in syms.items():
        positive = s.positive or name in BUILTIN_CONSTANTS
        gexpr = s if L == 1 else Pow(s, Fraction(1, L))
        gens.append(Gen("sym", name, gexpr, positive, L))
    for a in atoms:
        gens.append(Gen("atom", to_text(a), a, a.name == "exp"))
    for b, L in roots.items():
        gens.append(Gen("root", to_text(b), Pow(b, Fraction(1, L)), is_positive(b), L, b))
    gens.sort(key=_sort_key)
    return gens


@lru_cache(maxsize=256)
def _field_for(n: int):
    names = ",".join(f"g{i}" for i in range(n)) if n else ""
    if n == 0:
        K, = _make_field("g0", QQ, grlex)[:1]
        return K, ()
    K, *gs = _make_field(names, QQ, grlex)
    return K, tuple(gs)


def _convert(e: Expr, K, gmap: dict, cache: dict):
    if e in cache:
        return cache[e]
    if isinstance(e, Num):
        v = e.value
        out = K(QQ(v.numerator, v.denominator))
    elif isinstance(e, Sym):
        g, L = gmap[("sym", e.name)]
        out = g**L
    elif isinstance(e, Add):
        out = K(0)
        for t in e.terms:
            out = out + _convert(t, K, gmap, cache)
    elif isinstance(e, Mul):
        out = K(1)
        for f in e.factors:
            out = out * _convert(f, K, gmap, cache)
    elif isinstance(e, Pow):
        if e.exp.denominator == 1:
            out = _convert(e.base, K, gmap, cache) ** int(e.exp)
        elif isinstance(e.base, Sym):
            g, L = gmap[("sym", e.base.name)]
            out = g ** int(e.exp * L)
        else:
            g, L = gmap[("root", e.base)]
            out = g ** int(e.exp * L)
    elif isinstance(e, Func):
        out = gmap[("atom", e)][0]
    else:
        raise TypeError(type(e))
    cache[e] = out
    return out


def _reduce_roots(frac, K, relations):
    """Apply ``t^L = B`` to numerator and denominator until stable."""
    if not relations:
        return frac
    for _ in range(16):
        changed = False
        parts = []
        for poly in (frac.numer, frac.denom):
            acc = K(0)
            hit = False
            for monom, coeff in poly.terms():
                m = list(monom)
                term = K(coeff)
                for idx, L, B in relations:
                    if m[idx] >= L:
                        q, m[idx] = divmod(m[idx], L)
                        term = term * B**q
                        hit = True
                mono = K.ring({tuple(m): 1})
                acc = acc + term * K(mono)
            parts.append(acc)
            changed = changed or hit
        if not changed:
            return frac
        frac = parts[0] / parts[1]
    return frac


def _canonical(e: Expr) -> Canonical:
    p = _prepare(e)
    gens = _gens_for(p)
    K, gs = _field_for(len(gens))
    gmap = {}
    for g, t in zip(gens, gs):
        if g.kind == "sym":
            gmap[("sym", g.key)] = (t, g.root)
        elif g.kind == "atom":
            gmap[("atom", g.expr)] = (t, 1)
        else:
            gmap[("root", g.base)] = (t, g.root)
    cache: dict = {}
    frac = _convert(p, K, gmap, cache)
    relations = []
    for i, g in enumerate(gens):
        if g.kind == "root":
            relations.append((i, g.root, _convert(g.base, K, gmap, cache)))
    frac = _reduce_roots(frac, K, relations)
    num, den = frac.numer, frac.denom
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return Canonical(K, num, den, tuple(gens))


@lru_cache(maxsize=65536)
def canonical(e: Expr) -> Canonical:
    """Canonical form of ``e`` (see module docstring)."""
    return _canonical(e)


@lru_cache(maxsize=65536)
def simplify(e: Expr) -> Expr:
    """``e`` rewritten into its canonical form as an expression tree."""
    return canonical(e).to_expr()


def equal(a: Expr, b: Expr) -> bool:
    """Exact equality of canonical forms."""
    return canonical(add(a, mul(Num(-1), b))).is_zero


def is_exactly_zero(e: Expr) -> bool:
    return canonical(e).is_zero


def canonical_text(e: Expr) -> str:
    return canonical(e).key


__all__ = [
    "Canonical",
    "canonical",
    "simplify",
    "equal",
    "is_exactly_zero",
    "canonical_text",
    "ONE",
]
