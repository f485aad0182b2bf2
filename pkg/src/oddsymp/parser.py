"""Expression language and canonical printer for superfunctions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INT)?
    atom   := INT | NAME | '(' expr ')'

``NAME`` is a coordinate or constant name of the context (``x1``, ``th1``,
``p1`` by default) or a caller-supplied binding.  Juxtaposition is not
multiplication.  Division is only by even elements with invertible body.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .grassmann import (
    GrassmannError,
    NotInvertible,
    SuperFunction,
    VarContext,
    _fraction,
    invert_even,
)

__all__ = ["ParseError", "parse_expression", "format_superfunction", "format_polynomial"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", *_linecol(text, start))
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


def _linecol(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, text: str, ctx: VarContext, bindings: Mapping[str, SuperFunction]):
        self.text = text
        self.ctx = ctx
        self.bindings = bindings
        self.toks = _tokenize(text)
        self.i = 0

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.toks[self.i]
        raise ParseError(msg, *_linecol(self.text, tok.pos))

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def parse(self) -> SuperFunction:
        if self.peek().kind == "end":
            self.error("empty expression")
        out = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected {self.peek().text!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self):
        out = self.unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            tok = self.take()
            rhs = self.unary()
            if tok.text == "*":
                out = out * rhs
            else:
                out = out * self.reciprocal(rhs, tok)
        return out

    def reciprocal(self, value: SuperFunction, tok: _Tok) -> SuperFunction:
        if not value:
            self.error("division by zero", tok)
        if not value.is_even():
            self.error("division by odd element", tok)
        try:
            return invert_even(value)
        except NotInvertible:
            self.error("division by an element with zero body", tok)

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("+", "-"):
            self.take()
            val = self.unary()
            return -val if tok.text == "-" else val
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            tok = self.take()
            if tok.kind != "num":
                self.error("exponent must be a nonnegative integer literal", tok)
            return base ** int(tok.text)
        return base

    def atom(self):
        tok = self.take()
        ctx = self.ctx
        if tok.kind == "num":
            return ctx.const(int(tok.text))
        if tok.kind == "name":
            name = tok.text
            if name in self.bindings:
                val = self.bindings[name]
                if not isinstance(val, SuperFunction) or val.ctx != ctx:
                    self.error(f"{name} is not a superfunction of this context", tok)
                return val
            if name in ctx.even_names:
                return ctx.x(ctx.even_names.index(name))
            if name in ctx.odd_names:
                return ctx.theta(ctx.odd_names.index(name))
            if name in ctx.aux_names:
                return ctx.pi(ctx.aux_names.index(name))
            self.error(f"unknown name {name!r}", tok)
        if tok.kind == "op" and tok.text == "(":
            val = self.expr()
            if self.take().text != ")":
                self.error("expected ')'", self.toks[self.i - 1])
            return val
        self.error(f"unexpected {tok.text or 'end of input'!r}", tok)


def parse_expression(text: str, ctx: VarContext,
                     bindings: Mapping[str, SuperFunction] | None = None) -> SuperFunction:
    """Parse ``text`` into a canonical :class:`SuperFunction` of ``ctx``."""
    try:
        return _Parser(text, ctx, bindings or {}).parse()
    except ParseError:
        raise
    except GrassmannError as exc:
        raise ParseError(str(exc), 1, 1) from exc


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

def _format_monom(names, monom) -> str:
    parts = []
    for name, e in zip(names, monom):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def _signed_terms(p, names):
    """Yield (negative?, text) per polynomial term, leading term first."""
    for monom, c in p.terms():
        q = _fraction(c)
        mono = _format_monom(names, monom)
        neg = q < 0
        a = abs(q)
        if not mono:
            text = str(a)
        elif a == 1:
            text = mono
        else:
            text = f"{a}*{mono}"
        yield neg, text


def format_polynomial(p, names) -> str:
    out = ""
    for k, (neg, text) in enumerate(_signed_terms(p, names)):
        if k == 0:
            out = "-" + text if neg else text
        else:
            out += (" - " if neg else " + ") + text
    return out or "0"


def _coefficient_factor(c, names) -> tuple[bool, str]:
    """Split a coefficient into (negative?, text usable as a left factor)."""
    terms = list(_signed_terms(c.num, names))
    if c.is_polynomial():
        if len(terms) == 1:
            return terms[0]
        return False, f"({format_polynomial(c.num, names)})"
    if len(terms) == 1:
        neg, text = terms[0]
    else:
        neg, text = False, f"({format_polynomial(c.num, names)})"
    return neg, f"{text}/({format_polynomial(c.den, names)})"


def format_superfunction(f: SuperFunction) -> str:
    """Canonical text: terms by odd degree, then lexicographically."""
    ctx = f.ctx
    if not f.terms:
        return "0"
    names = ctx.even_names
    gen_names = ctx.generator_names()
    pieces = []
    for gens, c in f.monomials():
        mono = "*".join(gen_names[g] for g in gens)
        neg, factor = _coefficient_factor(c, names)
        if not mono:
            if c.is_polynomial():
                pieces.append((False, format_polynomial(c.num, names)))
                continue
            text = factor
        elif factor == "1":
            text = mono
        else:
            text = f"{factor}*{mono}"
        pieces.append((neg, text))
    out = ""
    for k, (neg, text) in enumerate(pieces):
        if k == 0:
            out = "-" + text if neg else text
        else:
            out += (" - " if neg else " + ") + text
    return out


def format_fraction(q: Fraction) -> str:
    return str(q)
