"""Text form of expressions, in the same grammar the parser reads."""

from __future__ import annotations

from fractions import Fraction

from .expr import Add, Expr, Func, Mul, Num, Pow, Sym, power

_ADD, _MUL, _POW, _ATOM = range(4)


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _is_negative(e: Expr) -> bool:
    if isinstance(e, Num):
        return e.value < 0
    return isinstance(e, Mul) and isinstance(e.factors[0], Num) and e.factors[0].value < 0


def _negate(e: Expr) -> Expr:
    if isinstance(e, Num):
        return Num(-e.value)
    c = e.factors[0].value
    rest = e.factors[1:]
    if c == -1:
        return rest[0] if len(rest) == 1 else Mul(rest)
    return Mul((Num(-c),) + rest)


def _exponent(q: Fraction) -> str:
    if q.denominator == 1 and q > 0:
        return str(q.numerator)
    return f"({_frac(q)})"


def _text(e: Expr, ctx: int) -> str:
    if isinstance(e, Num):
        v = e.value
        s = _frac(v)
        if v < 0 and ctx > _ADD:
            return f"({s})"
        if v.denominator != 1 and ctx > _MUL:
            return f"({s})"
        return s
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({_text(e.arg, _ADD)})"
    if isinstance(e, Pow):
        base = _text(e.base, _ATOM)
        if isinstance(e.base, Num) and e.base.value < 0:
            base = f"({_frac(e.base.value)})"
        s = f"{base}^{_exponent(e.exp)}"
        return f"({s})" if ctx >= _ATOM else s
    if isinstance(e, Add):
        parts = [_text(e.terms[0], _ADD)]
        for t in e.terms[1:]:
            if _is_negative(t):
                parts.append(" - " + _text(_negate(t), _MUL))
            else:
                parts.append(" + " + _text(t, _MUL))
        s = "".join(parts)
        return f"({s})" if ctx > _ADD else s
    if isinstance(e, Mul):
        if _is_negative(e):
            s = "-" + _text(_negate(e), _MUL)
            return f"({s})" if ctx > _ADD else s
        coeff = Fraction(1)
        numer: list[Expr] = []
        denom: list[Expr] = []
        for f in e.factors:
            if isinstance(f, Num):
                coeff *= f.value
            elif isinstance(f, Pow) and f.exp < 0:
                denom.append(power(f.base, -f.exp))
            else:
                numer.append(f)
        pieces = []
        if coeff.numerator != 1 or not numer:
            pieces.append(str(coeff.numerator))
        pieces.extend(_text(f, _POW) for f in numer)
        s = "*".join(pieces)
        dcoeff = coeff.denominator
        dpieces = ([str(dcoeff)] if dcoeff != 1 else []) + [_text(f, _POW) for f in denom]
        if dpieces:
            if len(dpieces) == 1:
                s += "/" + dpieces[0]
            else:
                s += "/(" + "*".join(dpieces) + ")"
        return f"({s})" if ctx > _MUL else s
    raise TypeError(type(e))


def to_text(e: Expr) -> str:
    return _text(e, _ADD)
