"""Time-dependent factor expressions such as ``((t lt 8e-4)? a : b)``.

Grammar, lowest precedence first::

    ternary    := comparison [ "?" ternary ":" ternary ]
    comparison := additive [ "lt" additive ]
    additive   := multiplicative ( ("+" | "-") multiplicative )*
    multiplicative := power ( ("*" | "/") power )*
    power      := unary [ "^" power ]            (right-associative)
    unary      := ("-" | "+") unary | primary
    primary    := number | "t" | "pi" | func "(" ternary ")" | "(" ternary ")"

A comparison is only valid as the condition of a ternary.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError

FUNCTIONS = {"cos": np.cos, "sin": np.sin, "exp": np.exp}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^?:()]))"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Ternary:
    cond: Compare
    then: object
    other: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class Expression:
    text: str
    tree: object

    def __call__(self, t):
        return evaluate(self, t)

    def __str__(self):
        return to_string(self.tree)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        start = len(text[: m.start(m.lastgroup)].encode())
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", off)

    def ternary(self):
        off = self.peek()[2]
        cond = self.comparison()
        if self.peek()[1] != "?":
            return cond
        if not isinstance(cond, Compare):
            raise ParseError("ternary condition must be a comparison", off)
        self.take()
        then = self.ternary()
        self.expect(":")
        other = self.ternary()
        return Ternary(cond, then, other)

    def comparison(self):
        left = self.additive()
        kind, val, _ = self.peek()
        if kind == "name" and val == "lt":
            self.take()
            return Compare("lt", left, self.additive())
        return left

    def additive(self):
        node = self.multiplicative()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self):
        node = self.power()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.power())
        return node

    def power(self):
        base = self.unary()
        if self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.power())
        return base

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in ("-", "+"):
            op = self.take()[1]
            return Unary(op, self.unary())
        return self.primary()

    def primary(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "t":
                return Var("t")
            if val in CONSTANTS:
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.ternary()
                self.expect(")")
                return Call(val, arg)
            raise ParseError(f"unknown identifier {val!r}", off)
        if val == "(":
            node = self.ternary()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", off)


def _check(node, cond_ok=False):
    if isinstance(node, Compare):
        if not cond_ok:
            raise ParseError("comparison used outside a ternary condition")
        _check(node.left)
        _check(node.right)
    elif isinstance(node, Ternary):
        _check(node.cond, cond_ok=True)
        _check(node.then)
        _check(node.other)
    elif isinstance(node, (Binary,)):
        _check(node.left)
        _check(node.right)
    elif isinstance(node, Unary):
        _check(node.operand)
    elif isinstance(node, Call):
        _check(node.arg)


def parse_expression(text: str) -> Expression:
    p = _Parser(text)
    tree = p.ternary()
    kind, val, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r} after expression", off)
    _check(tree)
    return Expression(text, tree)


def _eval(node, t):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return t if node.name == "t" else np.float64(CONSTANTS[node.name])
    if isinstance(node, Unary):
        v = _eval(node.operand, t)
        return -v if node.op == "-" else v
    if isinstance(node, Binary):
        a = _eval(node.left, t)
        b = _eval(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return np.divide(a, b)
        return np.power(a, b)
    if isinstance(node, Compare):
        return _eval(node.left, t) < _eval(node.right, t)
    if isinstance(node, Ternary):
        return np.where(_eval(node.cond, t), _eval(node.then, t), _eval(node.other, t))
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, t))
    raise TypeError(node)


def evaluate(expr: Expression, t):
    """IEEE double evaluation; ``t`` may be a scalar or an array."""
    arr = np.asarray(t, dtype=np.float64)
    with np.errstate(all="ignore"):
        out = np.asarray(_eval(expr.tree, arr), dtype=np.float64)
        out = np.broadcast_to(out, arr.shape) if arr.shape else out
    return float(out) if out.ndim == 0 else np.array(out)


def to_string(node) -> str:
    """Canonical fully-parenthesised form; parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"({node.op}{to_string(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Compare):
        return f"({to_string(node.left)} lt {to_string(node.right)})"
    if isinstance(node, Ternary):
        return f"({to_string(node.cond)} ? {to_string(node.then)} : {to_string(node.other)})"
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    raise TypeError(node)
