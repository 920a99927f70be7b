"""Recursive-descent parser for the expression grammar.

::

    expr     := term (('+' | '-') term)*
    term     := signed (('*' | '/') signed)*
    signed   := ('+' | '-') signed | factor
    factor   := base ('^' exponent)?
    exponent := ['-'] integer | '(' ['-'] integer ['/' integer] ')'
    base     := number | name | func '(' expr ')' | '(' expr ')'

Juxtaposition is not multiplication: ``x^2 y`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .expr import ALL_FUNCTIONS, Expr, Num, Sym, add, func, mul, neg, power


class ParseError(ValueError):
    """Base class for expression input errors."""


class ExprSyntaxError(ParseError):
    def __init__(self, message: str, offset: int, expected: frozenset[str], text: str = ""):
        self.offset = offset
        self.expected = expected
        self.text = text
        want = ", ".join(sorted(expected)) if expected else "nothing"
        super().__init__(f"{message} at byte {offset} (expected one of: {want})")


class UnknownFunction(ParseError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown function {name!r} at byte {offset}")


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    offset: int  # byte offset into the UTF-8 encoded input


_TOKEN_RE = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            break
        start = m.start(m.lastindex)
        offset = len(text[:start].encode("utf-8"))
        number, name, op = m.groups()
        if number is not None:
            tokens.append(Token("num", number, offset))
        elif name is not None:
            tokens.append(Token("name", name, offset))
        else:
            if op not in "+-*/^()":
                raise ExprSyntaxError(f"unexpected character {op!r}", offset, frozenset(), text)
            tokens.append(Token("op", op, offset))
        pos = m.end()
    tokens.append(Token("end", "", len(text.encode("utf-8"))))
    return tokens


_TOP_FOLLOW = frozenset({"+", "-", "*", "/", "^", "<end>"})
_BASE_START = frozenset({"<number>", "<name>", "("})


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, expected, message="unexpected token"):
        t = self.tok
        shown = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"{message} {shown}", t.offset, frozenset(expected), self.text)

    def accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str, expected=None):
        if not self.accept(op):
            self.fail(expected or {op})

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.fail(_TOP_FOLLOW)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while True:
            if self.accept("+"):
                terms.append(self.term())
            elif self.accept("-"):
                terms.append(neg(self.term()))
            else:
                return add(*terms)

    def term(self) -> Expr:
        e = self.signed()
        while True:
            if self.accept("*"):
                e = mul(e, self.signed())
            elif self.accept("/"):
                t = self.tok
                d = self.signed()
                if d == Num(0):
                    raise ExprSyntaxError("division by literal zero", t.offset, frozenset(), self.text)
                e = mul(e, power(d, -1))
            else:
                return e

    def signed(self) -> Expr:
        if self.accept("-"):
            return neg(self.signed())
        if self.accept("+"):
            return self.signed()
        return self.factor()

    def factor(self) -> Expr:
        b = self.base()
        if self.accept("^"):
            return power(b, self.exponent())
        return b

    def _integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.fail({"<integer>"})
        self.i += 1
        return int(t.text)

    def exponent(self) -> Fraction:
        if self.accept("("):
            sign = -1 if self.accept("-") else 1
            p = self._integer()
            q = 1
            if self.accept("/"):
                q = self._integer()
                if q == 0:
                    self.i -= 1
                    self.fail({"<nonzero integer>"})
            self.expect(")", {")", "/"})
            return Fraction(sign * p, q)
        sign = -1 if self.accept("-") else 1
        return Fraction(sign * self._integer())

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(Fraction(t.text))
        if t.kind == "name":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in ALL_FUNCTIONS:
                    raise UnknownFunction(t.text, t.offset)
                self.i += 1
                arg = self.expr()
                self.expect(")", {")", "+", "-", "*", "/", "^"})
                return func(t.text, arg)
            if t.text in ALL_FUNCTIONS:
                self.fail({"("})
            return Sym(t.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")", {")", "+", "-", "*", "/", "^"})
            return e
        self.fail(_BASE_START | {"+", "-"})


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an :class:`Expr`.

    Raises
    ------
    ExprSyntaxError
        with the byte offset of the offending token and the set of tokens
        that would have been accepted there.
    UnknownFunction
        for ``name(...)`` where ``name`` is not a builtin.
    """
    return _Parser(text).parse()
