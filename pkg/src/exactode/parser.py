"""Recursive-descent parser for coefficient expressions.

Grammar::

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' atom)?
    atom   := number | 'x' | 'y' | 'p' | "y'" | identifier
            | function '(' expr ')' | '(' expr ')' | '-' atom

A leading minus applies to the whole first term, so ``-x^2`` is ``-(x^2)``.
``int/int`` between two bare integer literals is read as one exact rational.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .expr import FUNCTIONS, VARIABLES, Const, Expression, Func, Neg, Param, Power, Product, Quotient, Sum, Var


class ParseError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownFunctionError(ParseError):
    pass


class MalformedNumberError(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    offset: int
    value: object = None


_NUMBER = re.compile(r"[0-9.]+(?:[eE][+-]?[0-9]+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            m = _NUMBER.match(text, i)
            raw = m.group()
            end = m.end()
            if end < n and (text[end].isalnum() or text[end] in "._"):
                raise MalformedNumberError(f"malformed number {text[i:end + 1]!r}", i, text)
            try:
                value = Fraction(raw)
            except ValueError:
                raise MalformedNumberError(f"malformed number {raw!r}", i, text) from None
            tokens.append(Token("num", raw, i, value))
            i = end
            continue
        if ch.isalpha() or ch == "_":
            m = _NAME.match(text, i)
            name = m.group()
            end = m.end()
            if text.startswith("''", end):
                raise ParseError("second derivatives are not expressions", i, text)
            if text.startswith("'", end):
                if name != "y":
                    raise ParseError(f"only y' may be primed, not {name}'", i, text)
                name, end = "p", end + 1
            tokens.append(Token("name", name, i))
            i = end
            continue
        if ch in "+-*/^()":
            tokens.append(Token("op", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i, text)
    tokens.append(Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def at(self, op: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == op

    def expect(self, op: str) -> None:
        if not self.at(op):
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {op!r}, found {found!r}", self.tok.offset, self.text)
        self.advance()

    def parse(self) -> Expression:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset, self.text)
        return e

    def expr(self) -> Expression:
        if self.at("-"):
            self.advance()
            terms = [Neg(self.term())]
        else:
            terms = [self.term()]
        while self.at("+") or self.at("-"):
            op = self.advance().text
            t = self.term()
            terms.append(Neg(t) if op == "-" else t)
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> Expression:
        first, raw = self.factor()
        factors = [first]
        while self.at("*") or self.at("/"):
            op = self.advance().text
            rhs, rhs_raw = self.factor()
            if op == "*":
                factors.append(rhs)
                raw = False
                continue
            if raw and rhs_raw and len(factors) == 1:
                # "3/2" is a single exact rational
                if rhs.value == 0:
                    factors = [Quotient(factors[0], rhs)]
                else:
                    factors = [Const(factors[0].value / rhs.value)]
            else:
                left = factors[0] if len(factors) == 1 else Product(tuple(factors))
                factors = [Quotient(left, rhs)]
            raw = False
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def factor(self) -> tuple[Expression, bool]:
        base, raw = self.atom()
        if self.at("^"):
            self.advance()
            exponent, _ = self.atom()
            return Power(base, exponent), False
        return base, raw

    def atom(self) -> tuple[Expression, bool]:
        t = self.tok
        if t.kind == "num":
            self.advance()
            value = t.value
            return Const(value), t.text.isdigit()
        if t.kind == "name":
            self.advance()
            if self.at("("):
                if t.text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {t.text!r}", t.offset, self.text)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Func(t.text, arg), False
            if t.text in FUNCTIONS:
                raise ParseError(f"function {t.text!r} needs a parenthesized argument", t.offset, self.text)
            if t.text in VARIABLES:
                return Var(t.text), False
            return Param(t.text), False
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner, False
        if self.at("-"):
            self.advance()
            inner, _ = self.atom()
            return Neg(inner), False
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", t.offset, self.text)


def parse(text: str) -> Expression:
    """Parse expression text; ``y'`` and ``p`` both denote the first derivative."""
    return _Parser(text).parse()
