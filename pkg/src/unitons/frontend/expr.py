"""Recursive-descent parser for polynomial frame expressions in ``z`` and ``zbar``.

Grammar (left associative, ``^`` binds tightest and takes an integer literal)::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := '-' unary | power
    power  := atom ('^' INT)*
    atom   := NUMBER | NUMBER 'i' | 'i' | 'z' | 'zbar' | '(' expr ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}\n  {text}\n  {' ' * pos}^")


class Expr:
    prec = 5

    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        raise NotImplementedError

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True, repr=False)
class Num(Expr):
    value: complex

    def evaluate(self, z):
        return np.full(np.shape(z), complex(self.value)) if np.ndim(z) else complex(self.value)

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def evaluate(self, z):
        z = np.asarray(z, complex) if np.ndim(z) else complex(z)
        return np.conj(z) if self.name == "zbar" else z

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    operand: Expr
    prec = 3

    def evaluate(self, z):
        return -self.operand.evaluate(z)

    def __repr__(self):
        return f"Neg({self.operand!r})"


@dataclass(frozen=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self):
        return 1 if self.op in "+-" else 2

    def evaluate(self, z):
        a, b = self.left.evaluate(z), self.right.evaluate(z)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        return a * b

    def __repr__(self):
        return f"BinOp({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int
    prec = 4

    def evaluate(self, z):
        # repeated squaring keeps integer powers exact in the polynomial sense
        base = self.base.evaluate(z)
        result = np.ones_like(base) if np.ndim(base) else 1.0 + 0j
        e = self.exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^()])
""", re.VERBOSE)


def tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            if m.group("num") is not None:
                kind = "imag" if m.group("imag") else "num"
                out.append((kind, m.group("num"), pos))
            elif m.group("name") is not None:
                out.append(("name", m.group("name"), pos))
            else:
                out.append(("op", m.group("op"), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = self.peek() if tok is None else tok
        raise ParseError(message, self.text, tok[2])

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            node = BinOp("*", node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            tok = self.peek()
            if tok[:2] == ("op", "-"):
                self.error("negative exponents are not allowed")
            if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
                self.error("exponent must be a non-negative integer literal")
            self.take()
            node = Pow(node, int(tok[1]))
        return node

    def atom(self) -> Expr:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Num(complex(float(val)))
        if kind == "imag":
            return Num(complex(0.0, float(val)))
        if kind == "name":
            if val in ("z", "zbar"):
                return Var(val)
            if val == "i":
                return Num(1j)
            self.error(f"unknown name {val!r}", tok)
        if (kind, val) == ("op", "("):
            node = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.error("expected ')'")
            self.take()
            return node
        self.error(f"unexpected {val or 'end of input'!r}", tok)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def _fmt_real(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_num(v: complex) -> str:
    if v.imag == 0 and v.real >= 0:
        return _fmt_real(v.real)
    if v.real == 0 and v.imag >= 0:
        return "i" if v.imag == 1 else _fmt_real(v.imag) + "i"
    re_s = _fmt_real(v.real)
    im_s = _fmt_real(abs(v.imag)) + "i"
    return f"({re_s}{'-' if v.imag < 0 else '+'}{im_s})"


def pretty(node: Expr) -> str:
    """Minimal-parenthesis rendering; ``parse_expr(pretty(e)) == e`` for parser output."""
    def wrap(child, need):
        s = pretty(child)
        return f"({s})" if need else s

    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.operand, node.operand.prec < 3)
    if isinstance(node, Pow):
        return wrap(node.base, node.base.prec < 4) + f"^{node.exponent}"
    if isinstance(node, BinOp):
        p = node.prec
        left = wrap(node.left, node.left.prec < p)
        right = wrap(node.right, node.right.prec <= p)
        sep = "*" if node.op == "*" else f" {node.op} "
        return left + sep + right
    raise TypeError(f"not an expression: {node!r}")
