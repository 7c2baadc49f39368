"""A small expression language for scalar fields on the torus.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' number)?
    atom   := number | 'x' | 'y' | 'pi' | ident '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``. The only
functions are sin, cos, exp, sqrt, log and abs. Error offsets are byte
offsets into the UTF-8 source.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EvalDomainError, ParseError, UnknownIdentifier
from .fields import GridSpec, ScalarField

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "log", "abs")
VARIABLES = ("x", "y")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()−])"
    r")"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int  # character offset


def _tokenize(src):
    toks = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ParseError(f"unexpected character {src[start]!r}", _byte(src, start))
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "−":
            text = "-"
        toks.append(_Tok(kind, text, start))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


def _byte(src, char_offset):
    return len(src[:char_offset].encode("utf-8"))


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, message, tok=None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, _byte(self.src, tok.pos))

    def take(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.take(text):
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise self.error(f"expected {text!r}, found {found}")

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.take("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.take("^"):
            if self.tok.kind != "number":
                raise self.error("exponent must be a numeric literal")
            exponent = float(self.tok.text)
            self.i += 1
            return BinOp("^", base, Const(exponent))
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text == "pi":
                return Const(math.pi)
            if tok.text not in FUNCTIONS:
                raise self.error(f"unknown identifier {tok.text!r}", tok, UnknownIdentifier)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(tok.text, arg)
        if self.take("("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"unexpected {found}")


def parse(src):
    """Parse ``src`` into an expression tree."""
    if not isinstance(src, str):
        raise ParseError(f"expression must be a string, got {type(src).__name__}", 0)
    return _Parser(src).parse()


def to_source(node):
    """Canonical fully parenthesised source; ``parse(to_source(t)) == t``."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------- evaluation


def _first_bad(mask, x, y):
    i, j = np.argwhere(mask)[0]
    return (int(i), int(j)), (float(x[i, j]), float(y[i, j]))


def _eval(node, x, y):
    if isinstance(node, Const):
        return np.full(x.shape, node.value)
    if isinstance(node, Var):
        return (x if node.name == "x" else y).copy()
    if isinstance(node, Neg):
        return -_eval(node.operand, x, y)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, y)
        b = _eval(node.right, x, y)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            bad = b == 0.0
            if np.any(bad):
                raise EvalDomainError("division by zero", *_first_bad(bad, x, y))
            return a / b
        with np.errstate(all="ignore"):
            out = np.power(a, b)
        bad = ~np.isfinite(out)
        if np.any(bad):
            raise EvalDomainError("power undefined", *_first_bad(bad, x, y))
        return out
    if isinstance(node, Call):
        a = _eval(node.arg, x, y)
        if node.func == "log":
            bad = a <= 0.0
            if np.any(bad):
                raise EvalDomainError("log of non-positive value", *_first_bad(bad, x, y))
            return np.log(a)
        if node.func == "sqrt":
            bad = a < 0.0
            if np.any(bad):
                raise EvalDomainError("sqrt of negative value", *_first_bad(bad, x, y))
            return np.sqrt(a)
        if node.func == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(a)
            bad = ~np.isfinite(out)
            if np.any(bad):
                raise EvalDomainError("exp overflow", *_first_bad(bad, x, y))
            return out
        return {"sin": np.sin, "cos": np.cos, "abs": np.abs}[node.func](a)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, grid):
    """Sample an expression tree (or source string) at the nodes of ``grid``."""
    if isinstance(node, str):
        node = parse(node)
    if not isinstance(grid, GridSpec):
        raise TypeError("evaluate needs a GridSpec")
    x, y = grid.coords()
    return ScalarField(grid, _eval(node, x, y))
