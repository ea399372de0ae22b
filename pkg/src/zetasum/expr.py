"""Small expression language for profiles and potentials.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | 'x' | 'pi' | 'e' | ident '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)`` and ``2^-1`` is ``0.5``.  Evaluation is vectorized over numpy
arrays; derivatives are built symbolically with light constant folding.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sinh", "cosh", "tanh", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExpressionError(ValueError):
    """Syntax error or unknown identifier; ``offset`` is 0-based."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(message if offset is None else f"{message} at offset {offset}")


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    op: str  # num, x, neg, + - * / ^, or a function name
    args: tuple = ()
    value: float = 0.0

    def __str__(self) -> str:
        if self.op == "num":
            return repr(self.value) if self.value != int(self.value) else str(int(self.value))
        if self.op == "x":
            return "x"
        if self.op == "neg":
            return f"-({self.args[0]})"
        if self.op in FUNCTIONS:
            return f"{self.op}({self.args[0]})"
        a, b = self.args
        return f"({a} {self.op} {b})"

    def __call__(self, x):
        return eval_expression(self, x)


def num(v: float) -> Node:
    return Node("num", (), float(v))


X = Node("x")

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
                    r"|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


def _tokenize(text: str) -> list:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[offset]!r}", offset)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.peek()
        if v != value or kind == "end":
            what = "end of input" if kind == "end" else repr(v)
            raise ExpressionError(f"expected {value!r}, found {what}", pos)
        self.take()

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Node(op, (node, self.term()))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Node(op, (node, self.unary()))
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Node("neg", (self.unary(),))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Node("^", (base, self.unary()))
        return base

    def atom(self) -> Node:
        kind, v, pos = self.take()
        if kind == "num":
            return num(float(v))
        if kind == "id":
            if v == "x":
                return X
            if v in CONSTANTS:
                return num(CONSTANTS[v])
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Node(v, (arg,))
            raise ExpressionError(f"unknown identifier {v!r}", pos)
        if v == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(v)
        raise ExpressionError(f"unexpected {what}", pos)


def parse_expression(text: str) -> Node:
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression", 0)
    p = _Parser(text)
    node = p.expr()
    kind, v, pos = p.peek()
    if kind != "end":
        raise ExpressionError(f"unexpected {v!r}", pos)
    return node


# --------------------------------------------------------------------------
# evaluation


def _check(cond, message):
    if np.any(cond):
        raise DomainError(message)


def eval_expression(node: Node, x):
    """Evaluate at a float or an array; domain violations raise :class:`DomainError`."""
    scalar = np.ndim(x) == 0
    out = _eval(node, np.asarray(x, dtype=float))
    out = np.broadcast_to(out, np.shape(x)).astype(float)
    return float(out) if scalar else out


def _eval(node: Node, x):
    op = node.op
    if op == "num":
        return np.float64(node.value)
    if op == "x":
        return x
    if op == "neg":
        return -_eval(node.args[0], x)
    if op in FUNCTIONS:
        a = _eval(node.args[0], x)
        if op == "log":
            _check(a <= 0, "log of a nonpositive number")
        if op == "sqrt":
            _check(a < 0, "sqrt of a negative number")
        with np.errstate(over="raise"):
            try:
                return getattr(np, op)(a)
            except FloatingPointError as exc:
                raise DomainError(f"overflow in {op}") from exc
    a, b = _eval(node.args[0], x), _eval(node.args[1], x)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        _check(b == 0, "division by zero")
        return a / b
    # power: integer exponents work for negative bases
    b_int = np.all(np.asarray(b) == np.round(b))
    if not b_int:
        _check(a < 0, "non-integer power of a negative number")
    _check((a == 0) & (np.asarray(b) < 0), "negative power of zero")
    return np.power(a, b)


# --------------------------------------------------------------------------
# derivatives


def _is_num(n: Node, v: float | None = None) -> bool:
    return n.op == "num" and (v is None or n.value == v)


def _add(a, b):
    if _is_num(a) and _is_num(b):
        return num(a.value + b.value)
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    return Node("+", (a, b))


def _sub(a, b):
    if _is_num(a) and _is_num(b):
        return num(a.value - b.value)
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return _neg(b)
    return Node("-", (a, b))


def _mul(a, b):
    if _is_num(a) and _is_num(b):
        return num(a.value * b.value)
    if _is_num(a, 0) or _is_num(b, 0):
        return num(0)
    if _is_num(a, 1):
        return b
    if _is_num(b, 1):
        return a
    return Node("*", (a, b))


def _div(a, b):
    if _is_num(a, 0):
        return num(0)
    if _is_num(b, 1):
        return a
    return Node("/", (a, b))


def _neg(a):
    if _is_num(a):
        return num(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Node("neg", (a,))


def _pow(a, b):
    if _is_num(b, 1):
        return a
    if _is_num(b, 0):
        return num(1)
    return Node("^", (a, b))


def _depends_on_x(n: Node) -> bool:
    return n.op == "x" or any(_depends_on_x(a) for a in n.args)


def derive_expression(node: Node) -> Node:
    """Symbolic d/dx."""
    op = node.op
    if op == "num":
        return num(0)
    if op == "x":
        return num(1)
    if op == "neg":
        return _neg(derive_expression(node.args[0]))
    if op in ("+", "-"):
        a, b = (derive_expression(n) for n in node.args)
        return _add(a, b) if op == "+" else _sub(a, b)
    if op == "*":
        u, v = node.args
        return _add(_mul(derive_expression(u), v), _mul(u, derive_expression(v)))
    if op == "/":
        u, v = node.args
        top = _sub(_mul(derive_expression(u), v), _mul(u, derive_expression(v)))
        return _div(top, _pow(v, num(2)))
    if op == "^":
        u, v = node.args
        du = derive_expression(u)
        if not _depends_on_x(v):
            return _mul(_mul(v, _pow(u, _sub(v, num(1)))), du)
        # d(u^v) = u^v (v' log u + v u'/u)
        inner = _add(_mul(derive_expression(v), Node("log", (u,))), _div(_mul(v, du), u))
        return _mul(node, inner)
    u = node.args[0]
    du = derive_expression(u)
    outer = {
        "sin": lambda: Node("cos", (u,)),
        "cos": lambda: _neg(Node("sin", (u,))),
        "exp": lambda: node,
        "log": lambda: _div(num(1), u),
        "sinh": lambda: Node("cosh", (u,)),
        "cosh": lambda: Node("sinh", (u,)),
        "tanh": lambda: _sub(num(1), _pow(node, num(2))),
        "sqrt": lambda: _div(num(1), _mul(num(2), node)),
    }[op]()
    return _mul(outer, du)


def is_constant(node: Node) -> bool:
    return not _depends_on_x(node)
