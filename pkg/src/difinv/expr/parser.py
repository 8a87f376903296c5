"""Pratt parser for the infix expression grammar.

Grammar summary (binding power in brackets)::

    expr   := expr ('+'|'-') expr        [10, left]
            | expr ('*'|'/') expr        [20, left]
            | ('-'|'+') expr             [30, prefix]
            | expr '^' expr              [40, right]
            | NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Unary minus binds tighter than ``*`` and looser than ``^``, so ``-x^2`` is
``-(x^2)`` and ``2^-3`` is ``2^(-3)``.

Identifiers are ``[A-Za-z][A-Za-z0-9_]*`` optionally followed by a jet
multi-index ``[a1,...,an]`` and/or primes.  Primes abbreviate derivatives in
one independent variable: ``u'`` is ``u1[1]``, ``u2''`` is ``u2[2]``.
Integer literals become exact rationals, literals with a decimal point or an
exponent become floats.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ExprSyntaxError, UnknownFunction
from .core import FUNC_KINDS, Const, Expr, Symbol, add, func, mul, neg, power, MINUS_ONE

_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_INDEX = re.compile(r"\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]")
_PRIMES = re.compile(r"'+")

_BINARY = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (40, 40)}
_PREFIX_BP = 30


def _prime_name(base: str, count: int) -> str:
    if not base[-1].isdigit():
        base = base + "1"
    return f"{base}[{count}]"


def tokenize(text: str):
    """Yield ``(kind, value, offset)`` triples; kinds are num, ident, op, eof."""
    try:
        raw = text.encode("ascii")
    except UnicodeEncodeError as exc:
        raise ExprSyntaxError("non-ASCII character", text, exc.start) from None
    del raw
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            lit = m.group(0)
            if m.group(1).isdigit() and not m.group(2):
                value = Fraction(int(lit))
            else:
                value = float(lit)
            tokens.append(("num", value, i))
            i = m.end()
            continue
        if c.isalpha():
            m = _IDENT.match(text, i)
            name = m.group(0)
            j = m.end()
            mi = _INDEX.match(text, j)
            if mi:
                idx = ",".join(s.strip() for s in mi.group(1).split(","))
                name = f"{name}[{idx}]"
                j = mi.end()
            mp = _PRIMES.match(text, j)
            if mp:
                if mi:
                    raise ExprSyntaxError("primes cannot follow a multi-index", text, j, {"op", "eof"})
                name = _prime_name(name, len(mp.group(0)))
                j = mp.end()
            tokens.append(("ident", name, i))
            i = j
            continue
        if c in "+-*/^()":
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", text, i)
    tokens.append(("eof", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, tok, expected):
        kind, value, offset = tok
        what = "end of input" if kind == "eof" else repr(value)
        raise ExprSyntaxError(f"unexpected {what}", self.text, offset, expected)

    def expect(self, op):
        tok = self.advance()
        if tok[0] != "op" or tok[1] != op:
            self.fail(tok, {repr(op)})
        return tok

    def parse(self) -> Expr:
        e = self.expr(0)
        tok = self.peek()
        if tok[0] != "eof":
            self.fail(tok, {"operator", "eof"})
        return e

    def expr(self, min_bp: int) -> Expr:
        lhs = self.prefix()
        while True:
            kind, value, _ = self.peek()
            if kind != "op" or value not in _BINARY:
                break
            lbp, rbp = _BINARY[value]
            if lbp < min_bp:
                break
            self.advance()
            rhs = self.expr(rbp)
            if value == "+":
                lhs = add(lhs, rhs)
            elif value == "-":
                lhs = add(lhs, neg(rhs))
            elif value == "*":
                lhs = mul(lhs, rhs)
            elif value == "/":
                lhs = mul(lhs, power(rhs, MINUS_ONE))
            else:
                lhs = power(lhs, rhs)
        return lhs

    def prefix(self) -> Expr:
        tok = self.advance()
        kind, value, offset = tok
        if kind == "num":
            return Const(value)
        if kind == "ident":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNC_KINDS:
                    raise UnknownFunction(value, offset)
                self.advance()
                arg = self.expr(0)
                self.expect(")")
                return func(value, arg)
            return Symbol(value)
        if kind == "op" and value == "(":
            inner = self.expr(0)
            self.expect(")")
            return inner
        if kind == "op" and value in "+-":
            operand = self.expr(_PREFIX_BP)
            return neg(operand) if value == "-" else operand
        self.fail(tok, {"number", "identifier", "'('", "'-'"})


def parse(text: str) -> Expr:
    """Parse ``text`` into a normalized expression."""
    return _Parser(text).parse()
