"""Arithmetic expression DSL with exact forward-mode derivatives.

Charts are defined by small expression strings over ``+ - * / ^``, the
functions ``sin cos atan2 sqrt exp log``, coordinate variables and named
parameters.  Evaluation propagates truncated Taylor jets, so first, second
and third partial derivatives come out exact to rounding -- no finite
difference truncation enters the tensor pipeline.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EvaluationError, ExpressionParseError

FUNCTIONS = {"sin": 1, "cos": 1, "atan2": 2, "sqrt": 1, "exp": 1, "log": 1}


def _outer(a, b):
    return np.multiply.outer(a, b)


def _sym3(t2, v1):
    # t2_{ab} v_c symmetrized over the three slot placements
    t = np.multiply.outer(t2, v1)
    return t + t.transpose(0, 2, 1) + t.transpose(2, 0, 1)


def _triple(a, b, c):
    return np.multiply.outer(np.multiply.outer(a, b), c)


def _triple_mixed(u, v):
    # u_a u_b v_c + u_a v_b u_c + v_a u_b u_c
    t = _triple(u, u, v)
    return t + t.transpose(0, 2, 1) + t.transpose(2, 0, 1)


class Jet:
    """Multivariate Taylor jet: value plus symmetric derivative tensors.

    ``order`` is 0..3; ``d2[a, b] = d_a d_b f`` and so on.  Arithmetic with
    plain floats lifts them to constants.
    """

    __slots__ = ("order", "dim", "val", "d1", "d2", "d3")

    def __init__(self, order, dim, val, d1=None, d2=None, d3=None):
        self.order = order
        self.dim = dim
        self.val = float(val)
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3

    @classmethod
    def constant(cls, value, dim, order):
        j = cls(order, dim, value)
        if order >= 1:
            j.d1 = np.zeros(dim)
        if order >= 2:
            j.d2 = np.zeros((dim, dim))
        if order >= 3:
            j.d3 = np.zeros((dim, dim, dim))
        return j

    @classmethod
    def variable(cls, value, index, dim, order):
        j = cls.constant(value, dim, order)
        if order >= 1:
            j.d1[index] = 1.0
        return j

    def _like(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.dim, self.order)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        o = self._like(other)
        j = Jet(self.order, self.dim, self.val + o.val)
        if self.order >= 1:
            j.d1 = self.d1 + o.d1
        if self.order >= 2:
            j.d2 = self.d2 + o.d2
        if self.order >= 3:
            j.d3 = self.d3 + o.d3
        return j

    __radd__ = __add__

    def __neg__(self):
        j = Jet(self.order, self.dim, -self.val)
        if self.order >= 1:
            j.d1 = -self.d1
        if self.order >= 2:
            j.d2 = -self.d2
        if self.order >= 3:
            j.d3 = -self.d3
        return j

    def __sub__(self, other):
        return self + (-self._like(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._like(other)
        j = Jet(self.order, self.dim, self.val * o.val)
        if self.order >= 1:
            j.d1 = self.d1 * o.val + self.val * o.d1
        if self.order >= 2:
            j.d2 = (
                self.d2 * o.val
                + _outer(self.d1, o.d1)
                + _outer(o.d1, self.d1)
                + self.val * o.d2
            )
        if self.order >= 3:
            j.d3 = (
                self.d3 * o.val
                + _sym3(self.d2, o.d1)
                + _sym3(o.d2, self.d1)
                + self.val * o.d3
            )
        return j

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._like(other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return (exponent * self.log()).exp()
        c = float(exponent)
        if c == round(c):
            c = round(c)
        u = self.val
        if u == 0.0:
            if not isinstance(c, int):
                raise EvaluationError("0 raised to a non-integer power")
            if c < 0:
                raise EvaluationError("0 raised to a negative power")
        if u < 0.0 and not isinstance(c, int):
            raise EvaluationError(f"negative base {u!r} with non-integer exponent {c!r}")
        return self._compose(
            u**c,
            c * u ** (c - 1) if c != 0 else 0.0,
            c * (c - 1) * u ** (c - 2) if c not in (0, 1) else 0.0,
            c * (c - 1) * (c - 2) * u ** (c - 3) if c not in (0, 1, 2) else 0.0,
        )

    def __rpow__(self, base):
        b = float(base)
        if b <= 0.0:
            raise EvaluationError(f"non-positive base {b!r} with variable exponent")
        return (self * math.log(b)).exp()

    # -- composition with scalar functions ----------------------------------

    def _compose(self, f0, f1, f2=0.0, f3=0.0):
        j = Jet(self.order, self.dim, f0)
        if self.order >= 1:
            j.d1 = f1 * self.d1
        if self.order >= 2:
            j.d2 = f2 * _outer(self.d1, self.d1) + f1 * self.d2
        if self.order >= 3:
            j.d3 = (
                f3 * _triple(self.d1, self.d1, self.d1)
                + f2 * _sym3(self.d2, self.d1)
                + f1 * self.d3
            )
        return j

    def _reciprocal(self):
        u = self.val
        if u == 0.0:
            raise EvaluationError("division by zero")
        return self._compose(1.0 / u, -1.0 / u**2, 2.0 / u**3, -6.0 / u**4)

    def sin(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._compose(s, c, -s, -c)

    def cos(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._compose(c, -s, -c, s)

    def exp(self):
        e = math.exp(self.val)
        return self._compose(e, e, e, e)

    def log(self):
        u = self.val
        if u <= 0.0:
            raise EvaluationError(f"log of non-positive value {u!r}")
        return self._compose(math.log(u), 1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def sqrt(self):
        u = self.val
        if u < 0.0:
            raise EvaluationError(f"sqrt of negative value {u!r}")
        if u == 0.0:
            raise EvaluationError("sqrt not differentiable at 0")
        r = math.sqrt(u)
        return self._compose(r, 0.5 / r, -0.25 / u / r, 0.375 / u**2 / r)


def jet_atan2(y, x):
    """atan2 of two jets (or floats), with exact derivatives off the origin."""
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return math.atan2(y, x)
    ref = y if isinstance(y, Jet) else x
    u = ref._like(y)
    v = ref._like(x)
    yv, xv = u.val, v.val
    r2 = xv * xv + yv * yv
    if r2 == 0.0:
        raise EvaluationError("atan2 evaluated at the origin")
    order, dim = ref.order, ref.dim
    j = Jet(order, dim, math.atan2(yv, xv))
    if order == 0:
        return j
    r4 = r2 * r2
    gu, gv = xv / r2, -yv / r2
    j.d1 = gu * u.d1 + gv * v.d1
    if order >= 2:
        guu = -2.0 * xv * yv / r4
        guv = (yv * yv - xv * xv) / r4
        gvv = 2.0 * xv * yv / r4
        j.d2 = (
            guu * _outer(u.d1, u.d1)
            + guv * (_outer(u.d1, v.d1) + _outer(v.d1, u.d1))
            + gvv * _outer(v.d1, v.d1)
            + gu * u.d2
            + gv * v.d2
        )
    if order >= 3:
        r6 = r4 * r2
        guuu = 2.0 * xv * (3.0 * yv * yv - xv * xv) / r6  # d^3/dy^3
        guuv = 2.0 * yv * (3.0 * xv * xv - yv * yv) / r6  # d^3/dy^2 dx
        guvv = 2.0 * xv * (xv * xv - 3.0 * yv * yv) / r6  # d^3/dy dx^2
        gvvv = 2.0 * yv * (yv * yv - 3.0 * xv * xv) / r6  # d^3/dx^3
        j.d3 = (
            guuu * _triple(u.d1, u.d1, u.d1)
            + guuv * _triple_mixed(u.d1, v.d1)
            + guvv * _triple_mixed(v.d1, u.d1)
            + gvvv * _triple(v.d1, v.d1, v.d1)
            + guu * _sym3(u.d2, u.d1)
            + guv * (_sym3(u.d2, v.d1) + _sym3(v.d2, u.d1))
            + gvv * _sym3(v.d2, v.d1)
            + gu * u.d3
            + gv * v.d3
        )
    return j


def _lift(fn_name, args):
    args = list(args)
    if fn_name == "atan2":
        return jet_atan2(args[0], args[1])
    a = args[0]
    if isinstance(a, Jet):
        return getattr(a, fn_name)()
    if fn_name == "log" and a <= 0:
        raise EvaluationError(f"log of non-positive value {a!r}")
    if fn_name == "sqrt" and a < 0:
        raise EvaluationError(f"sqrt of negative value {a!r}")
    return getattr(math, fn_name)(a)


# -- parsing ---------------------------------------------------------------


class Token(NamedTuple):
    kind: str  # NUM, IDENT, OP, LPAREN, RPAREN, COMMA, END
    text: str
    line: int
    col: int


_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


def _tokenize(source: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_col = col
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER_RE.match(source, i)
            if m is None:
                raise ExpressionParseError(f"bad number literal at {ch!r}", line, start_col, ch)
            text = m.group(0)
            tokens.append(Token("NUM", text, line, start_col))
            col += len(text)
            i = m.end()
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if source.startswith("**", i):
            tokens.append(Token("OP", "^", line, start_col))
            i += 2
            col += 2
            continue
        if ch in "+-*/^":
            tokens.append(Token("OP", ch, line, start_col))
        elif ch == "(":
            tokens.append(Token("LPAREN", ch, line, start_col))
        elif ch == ")":
            tokens.append(Token("RPAREN", ch, line, start_col))
        elif ch == ",":
            tokens.append(Token("COMMA", ch, line, start_col))
        else:
            raise ExpressionParseError(f"unexpected character {ch!r}", line, start_col, ch)
        i += 1
        col += 1
    tokens.append(Token("END", "", line, col))
    return tokens


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    ident: str
    col: int


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    col: int


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExpressionParseError(
                f"expected {kind}, found {tok.text or 'end of input'!r}",
                tok.line,
                tok.col,
                tok.text,
            )
        return self.advance()

    def parse(self):
        node = self.expression()
        tok = self.peek()
        if tok.kind != "END":
            raise ExpressionParseError(
                f"unexpected trailing token {tok.text!r}", tok.line, tok.col, tok.text
            )
        return node

    def expression(self):
        node = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.advance()
            return Neg(self.factor())
        if tok.kind == "OP" and tok.text == "+":
            self.advance()
            return self.factor()
        return self.power()

    def power(self):
        node = self.atom()
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "^":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def atom(self):
        tok = self.advance()
        if tok.kind == "NUM":
            return Num(float(tok.text))
        if tok.kind == "IDENT":
            if self.peek().kind == "LPAREN":
                if tok.text not in FUNCTIONS:
                    raise ExpressionParseError(
                        f"unknown function {tok.text!r}", tok.line, tok.col, tok.text
                    )
                self.advance()
                args = [self.expression()]
                while self.peek().kind == "COMMA":
                    self.advance()
                    args.append(self.expression())
                self.expect("RPAREN")
                arity = FUNCTIONS[tok.text]
                if len(args) != arity:
                    raise ExpressionParseError(
                        f"function {tok.text!r} takes {arity} argument(s), got {len(args)}",
                        tok.line,
                        tok.col,
                        tok.text,
                    )
                return Call(tok.text, tuple(args), tok.col)
            return Name(tok.text, tok.col)
        if tok.kind == "LPAREN":
            node = self.expression()
            self.expect("RPAREN")
            return node
        raise ExpressionParseError(
            f"unexpected token {tok.text or 'end of input'!r}", tok.line, tok.col, tok.text
        )


def _free_names(node, out):
    if isinstance(node, Name):
        out[node.ident] = node.col
    elif isinstance(node, Neg):
        _free_names(node.arg, out)
    elif isinstance(node, BinOp):
        _free_names(node.left, out)
        _free_names(node.right, out)
    elif isinstance(node, Call):
        for a in node.args:
            _free_names(a, out)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        return env[node.ident]
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, BinOp):
        left = _eval(node.left, env)
        right = _eval(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if not isinstance(left, Jet) and not isinstance(right, Jet):
                if right == 0.0:
                    raise EvaluationError("division by zero")
                return left / right
            return left / right
        if node.op == "^":
            if isinstance(right, Jet):
                parts = [p for p in (right.d1, right.d2, right.d3) if p is not None]
                if any(np.any(p != 0.0) for p in parts):
                    return left**right
                right = right.val  # exponent is constant at every order
            return left**right
        raise AssertionError(node.op)
    if isinstance(node, Call):
        return _lift(node.func, [_eval(a, env) for a in node.args])
    raise AssertionError(type(node))


class Expression:
    """A parsed expression, reusable against many environments."""

    def __init__(self, source: str):
        self.source = source
        self.ast = _Parser(source).parse()
        names: dict[str, int] = {}
        _free_names(self.ast, names)
        self.free_names = names  # name -> first column of use

    def __call__(self, env):
        return _eval(self.ast, env)

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse_expression(source: str) -> Expression:
    return Expression(source)
