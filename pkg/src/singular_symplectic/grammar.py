"""Infix text grammar for :class:`SymExpr`.

::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" exponent)?
    exponent := INT | "(" ["-"] INT ["/" INT] ")"
    atom   := NUMBER | NAME | "sqrt" "(" expr ")" | "(" expr ")"

``str(expr)`` emits this grammar in canonical form, so ``str(parse_expr(s)) == s``
for every canonical string ``s``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .symbolic import SymExpr, SymbolicError

__all__ = ["ParseError", "parse_expr"]


class ParseError(SymbolicError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "name", "op", "end"
    text: str
    col: int


def _tokenize(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1) is not None:
            toks.append(_Tok("num", m.group(1), col0 + m.start(1)))
        elif m.group(2) is not None:
            toks.append(_Tok("name", m.group(2), col0 + m.start(2)))
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", line, col0 + m.start(3))
            toks.append(_Tok("op", ch, col0 + m.start(3)))
        pos = m.end()
    toks.append(_Tok("end", "", col0 + len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, radial: frozenset[str], line: int, col0: int):
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.radial = radial
        self.line = line

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        return ParseError(msg, self.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.take()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", self.line, t.col)
        return t

    def parse(self) -> SymExpr:
        e = self.expr()
        if self.peek().kind != "end":
            raise self.error(f"unexpected {self.peek().text!r}")
        return e

    def expr(self) -> SymExpr:
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> SymExpr:
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op.text == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by zero", self.line, op.col)
                e = e / rhs
        return e

    def unary(self) -> SymExpr:
        if self.peek().text == "-":
            self.take()
            return -self.unary()
        if self.peek().text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> SymExpr:
        base = self.atom()
        if self.peek().text != "^":
            return base
        tok = self.take()
        k = self.exponent()
        try:
            return base ** k
        except SymbolicError as exc:
            raise ParseError(str(exc), self.line, tok.col) from None

    def exponent(self):
        t = self.peek()
        if t.kind == "num":
            self.take()
            if "." in t.text:
                raise self.error("exponent must be an integer", t)
            return int(t.text)
        if t.text != "(":
            raise self.error("expected exponent", t)
        self.take()
        sign = 1
        if self.peek().text == "-":
            self.take()
            sign = -1
        p = self.take()
        if p.kind != "num" or "." in p.text:
            raise self.error("expected integer exponent", p)
        val = Fraction(int(p.text))
        if self.peek().text == "/":
            self.take()
            q = self.take()
            if q.kind != "num" or "." in q.text or int(q.text) == 0:
                raise self.error("expected integer denominator", q)
            val = val / int(q.text)
        self.expect(")")
        val *= sign
        return int(val) if val.denominator == 1 else val

    def atom(self) -> SymExpr:
        t = self.take()
        if t.kind == "num":
            return SymExpr.const(Fraction(t.text))
        if t.kind == "name":
            if t.text == "sqrt" and self.peek().text == "(":
                self.take()
                inner = self.expr()
                self.expect(")")
                try:
                    return SymExpr.sqrt(inner)
                except SymbolicError as exc:
                    raise ParseError(str(exc), self.line, t.col) from None
            return SymExpr.var(t.text, radial=t.text in self.radial)
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", self.line, t.col)


def parse_expr(text: str, radial: Iterable[str] = (), line: int = 1, column: int = 1) -> SymExpr:
    """Parse ``text``; names listed in ``radial`` become radial-positive variables.

    ``line``/``column`` offset the positions reported in :class:`ParseError`.
    """
    return _Parser(text, frozenset(radial), line, column).parse()
