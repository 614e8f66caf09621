"""Coefficient expression language.

Grammar (highest binding first)::

    atom    := NUMBER | 't' | 'x' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
    power   := atom ['^' unary]            # right-associative
    unary   := '-' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

FUNC is one of ``sin cos exp sqrt abs``. So ``-x^2`` is ``-(x^2)`` and
``2^3^2`` is ``2^(3^2)``. Expressions evaluate elementwise on numpy arrays.
"""

import math
import re

import numpy as np

from .errors import ExpressionError, ExpressionSyntaxError, UnknownIdentifier

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
VARIABLES = ("t", "x")
CONSTANTS = {"pi": math.pi}

# printing precedence
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<bad>\S))"
)


class Node:
    prec = _ATOM

    def evaluate(self, t, x):
        """Evaluate at broadcastable arrays ``t`` and ``x``; raises on non-finite output."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = self._eval(t, x)
        out = np.array(np.broadcast_to(out, np.broadcast(t, x).shape), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ExpressionError(f"domain error evaluating {self}")
        return out

    def __call__(self, t, x):
        return self.evaluate(t, x)

    def _eval(self, t, x):
        raise NotImplementedError

    def free_variables(self):
        return set()


class Number(Node):
    def __init__(self, value):
        self.value = float(value)

    def _eval(self, t, x):
        return self.value

    def __str__(self):
        return repr(self.value)


class Constant(Node):
    def __init__(self, name):
        self.name = name

    def _eval(self, t, x):
        return CONSTANTS[self.name]

    def __str__(self):
        return self.name


class Variable(Node):
    def __init__(self, name):
        self.name = name

    def _eval(self, t, x):
        return t if self.name == "t" else x

    def free_variables(self):
        return {self.name}

    def __str__(self):
        return self.name


class Call(Node):
    def __init__(self, name, arg):
        self.name = name
        self.arg = arg

    def _eval(self, t, x):
        return FUNCTIONS[self.name](self.arg._eval(t, x))

    def free_variables(self):
        return self.arg.free_variables()

    def __str__(self):
        return f"{self.name}({self.arg})"


class Negate(Node):
    prec = _UNARY

    def __init__(self, operand):
        self.operand = operand

    def _eval(self, t, x):
        return -self.operand._eval(t, x)

    def free_variables(self):
        return self.operand.free_variables()

    def __str__(self):
        inner = str(self.operand)
        if self.operand.prec < _UNARY:
            inner = f"({inner})"
        return f"-{inner}"


class BinaryOp(Node):
    _ops = {
        "+": (_ADD, np.add),
        "-": (_ADD, np.subtract),
        "*": (_MUL, np.multiply),
        "/": (_MUL, np.divide),
        "^": (_POW, np.power),
    }

    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right
        self.prec = self._ops[op][0]

    def _eval(self, t, x):
        return self._ops[self.op][1](self.left._eval(t, x), self.right._eval(t, x))

    def free_variables(self):
        return self.left.free_variables() | self.right.free_variables()

    def __str__(self):
        left, right = str(self.left), str(self.right)
        if self.op == "^":
            if self.left.prec <= _POW:
                left = f"({left})"
            if self.right.prec < _UNARY:
                right = f"({right})"
            return f"{left}^{right}"
        if self.left.prec < self.prec:
            left = f"({left})"
        if self.right.prec <= self.prec:
            right = f"({right})"
        return f"{left} {self.op} {right}"


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break  # only trailing whitespace left
        kind = m.lastgroup
        start = m.start(kind)
        if kind == "bad":
            raise ExpressionSyntaxError(f"unexpected character {m.group(kind)!r}", start)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.advance()
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {what}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinaryOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinaryOp(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Negate(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinaryOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Number(val)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in VARIABLES:
                return Variable(val)
            if val in CONSTANTS:
                return Constant(val)
            raise UnknownIdentifier(val, pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {what}", pos)


def parse_expression(text):
    """Parse ``text`` into an evaluable expression tree.

    >>> parse_expression("2 + sin(t)*cos(pi*x)").evaluate(0.0, 0.0)
    array(3.)
    """
    if isinstance(text, Node):
        return text
    if isinstance(text, (int, float)):
        return Number(text)
    return _Parser(str(text)).parse()
