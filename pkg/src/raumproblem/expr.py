"""Scalar field expressions in x1..xn: parsing, printing, jets.

Grammar (``^`` is right-associative and binds tighter than unary minus, so
``-x1^2`` is ``-(x1^2)``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | 'x'<k> | func '(' expr ')' | '(' expr ')'
    func   := exp | log | sin | cos | sqrt

Numbers are decimal floats (``2``, ``0.5``, ``1e-3``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jets
from .jets import Jet2

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}" + (f" in {source!r}" if source else ""))


class ExprDomainError(ExprError):
    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message}: {subexpression}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as written


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                       r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


def _tokenize(source: str):
    pos = 0
    tokens = []
    while True:
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            rest = source[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", bad, source)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, n: int):
        self.source = source
        self.n = n
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(msg, tok[2], self.source)

    def expect(self, text):
        tok = self.take()
        if tok[1] != text or tok[0] != "op":
            raise self.error(f"expected {text!r}, found {tok[1] or 'end of input'!r}", tok)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            m = re.fullmatch(r"x([1-9]\d*)", text)
            if m:
                k = int(m.group(1))
                if k > self.n:
                    raise ExprSyntaxError(f"variable index out of range: {text} with n={self.n}", pos, self.source)
                return Var(k)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos, self.source)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"expected a number, variable, function or '(' but found {text or 'end of input'!r}", tok)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _fmt_num(v: float) -> str:
    if v < 0 or not math.isfinite(v):
        raise ExprError(f"cannot print literal {v!r}")
    if float(v).is_integer() and v < 1e15:
        return str(int(v))
    return repr(float(v))


def to_source(node: Node) -> str:
    """Canonical text with minimal parentheses; re-parses to the same tree."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        return "-" + (f"({inner})" if _prec(node.arg) < 3 else inner)
    left, right = to_source(node.left), to_source(node.right)
    p = _PREC[node.op]
    if node.op == "^":
        if _prec(node.left) < 5:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Num):
        return 0
    if isinstance(node, (Neg, Call)):
        return max_var(node.arg)
    return max(max_var(node.left), max_var(node.right))


def is_constant(node: Node) -> bool:
    return max_var(node) == 0


def _int_exponent(c: float):
    return int(c) if float(c).is_integer() and abs(c) < 2**31 else None


def _domain_check(ok, message, node):
    if not np.all(ok):
        raise ExprDomainError(message, to_source(node))


def _eval(node: Node, x: np.ndarray, jet: bool):
    """Evaluate at points ``x`` (shape B + (n,)); jets if ``jet`` else values."""
    n = x.shape[-1]
    batch = x.shape[:-1]
    if isinstance(node, Num):
        return Jet2.constant(node.value, n, batch) if jet else np.full(batch, node.value)
    if isinstance(node, Var):
        return Jet2.variable(x, node.index - 1) if jet else x[..., node.index - 1].copy()
    if isinstance(node, Neg):
        return -_eval(node.arg, x, jet)
    if isinstance(node, Call):
        a = _eval(node.arg, x, jet)
        v = a.value if jet else a
        if node.func == "log":
            _domain_check(v > 0, "log of non-positive value", node)
        elif node.func == "sqrt":
            _domain_check(v > 0, "sqrt of non-positive value", node)
        fn = getattr(jets, node.func) if jet else getattr(np, node.func)
        return fn(a)
    a = _eval(node.left, x, jet)
    if node.op == "^":
        return _power(node, a, x, jet)
    b = _eval(node.right, x, jet)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    bv = b.value if jet else b
    _domain_check(bv != 0, "division by zero", node)
    return a / b


def _power(node: BinOp, a, x, jet):
    av = a.value if jet else a
    if is_constant(node.right):
        c = float(_eval(node.right, np.zeros(x.shape[-1]), False))
        k = _int_exponent(c)
        if k is not None:
            if k < 0:
                _domain_check(av != 0, "negative power of zero", node)
            return a.powi(k) if jet else av**k
        _domain_check(av > 0, "non-integer power of non-positive value", node)
        return a.powf(c) if jet else av**c
    _domain_check(av > 0, "variable power of non-positive value", node)
    b = _eval(node.right, x, jet)
    if jet:
        return jets.exp(b * jets.log(a))
    return np.exp(b * np.log(av))


class ScalarExpression:
    """A parsed expression over x1..xn."""

    __slots__ = ("source", "n", "ast")

    def __init__(self, ast: Node, n: int, source: str | None = None):
        if max_var(ast) > n:
            raise ExprError(f"expression uses x{max_var(ast)} but n={n}")
        self.ast = ast
        self.n = n
        self.source = source if source is not None else to_source(ast)

    def __repr__(self):
        return f"ScalarExpression({self.source!r}, n={self.n})"

    def __str__(self):
        return self.source

    def __eq__(self, other):
        return isinstance(other, ScalarExpression) and self.ast == other.ast and self.n == other.n

    def __hash__(self):
        return hash((self.ast, self.n))

    def canonical(self) -> str:
        return to_source(self.ast)

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ExprError(f"point has {x.shape[-1]} coordinates, expression expects {self.n}")
        return x

    def jet(self, x) -> Jet2:
        return _eval(self.ast, self._points(x), True)

    def jet1(self, x):
        j = self.jet(x)
        return j.value, j.gradient

    def value(self, x) -> np.ndarray:
        return np.asarray(_eval(self.ast, self._points(x), False), dtype=float)

    def diff(self, i: int) -> "ScalarExpression":
        """Symbolic partial derivative along x_i (1-based) as a new tree."""
        return ScalarExpression(diff(self.ast, i), self.n)

    def __mul__(self, other):
        return ScalarExpression(_mul(self.ast, other.ast), max(self.n, other.n))


def parse(source: str, n: int) -> ScalarExpression:
    if not isinstance(source, str):
        raise ExprError(f"expression must be a string, got {type(source).__name__}")
    return ScalarExpression(_Parser(source, n).parse(), n, source)


def eval_jet(e: ScalarExpression, x) -> Jet2:
    return e.jet(x)


ZERO, ONE = Num(0.0), Num(1.0)


def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a):
    if a == ZERO:
        return ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if ZERO in (a, b):
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def diff(node: Node, i: int) -> Node:
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == i else ZERO
    if isinstance(node, Neg):
        return _neg(diff(node.arg, i))
    if isinstance(node, Call):
        a, da = node.arg, diff(node.arg, i)
        if da == ZERO:
            return ZERO
        if node.func == "exp":
            return _mul(node, da)
        if node.func == "log":
            return _div(da, a)
        if node.func == "sin":
            return _mul(Call("cos", a), da)
        if node.func == "cos":
            return _neg(_mul(Call("sin", a), da))
        return _div(da, _mul(Num(2.0), node))
    a, b = node.left, node.right
    da, db = diff(a, i), diff(b, i)
    if node.op == "+":
        return _add(da, db)
    if node.op == "-":
        return _sub(da, db)
    if node.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if node.op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), BinOp("^", b, Num(2.0)))
    if is_constant(b):
        if da == ZERO:
            return ZERO
        if isinstance(b, Num):
            e = b.value - 1.0
            lower = Num(e) if e >= 0 else Neg(Num(-e))
        else:
            lower = BinOp("-", b, ONE)
        return _mul(_mul(b, BinOp("^", a, lower)), da)
    return _mul(node, _add(_mul(db, Call("log", a)), _div(_mul(b, da), a)))
