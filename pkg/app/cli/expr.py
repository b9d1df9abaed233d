from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.special import gamma

from app.errors import ExprError

FUNCTIONS: dict[str, tuple[int, Callable[..., np.ndarray]]] = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "sqrt": (1, np.sqrt),
    "gammafn": (1, gamma),
    "pow": (2, np.power),
}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("t", "x")

_SYMBOLS = "+-*/^(),"


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


_NOWHERE = Pos(0, 0)


@dataclass(frozen=True)
class Num:
    value: float
    pos: Pos = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class Const:
    name: str
    pos: Pos = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: Pos = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]
    pos: Pos = field(default=_NOWHERE, compare=False)


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: Pos


def _position(source: str, offset: int, base: Pos) -> Pos:
    head = source[:offset]
    line = head.count("\n")
    if line == 0:
        return Pos(base.line, base.col + offset)
    return Pos(base.line + line, offset - head.rfind("\n"))


def tokenize(source: str, *, origin: Pos = Pos(1, 1)) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            while i < n and (source[i].isdigit() or source[i] == "."):
                i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            if text.count(".") > 1:
                raise ExprError(f"malformed number {text!r}", **vars(_position(source, start, origin)))
            tokens.append(Token("num", text, _position(source, start, origin)))
        elif ch.isalpha() or ch == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            tokens.append(Token("ident", source[start:i], _position(source, start, origin)))
        elif ch in _SYMBOLS:
            i += 1
            tokens.append(Token(ch, ch, _position(source, start, origin)))
        else:
            raise ExprError(f"unexpected character {ch!r}", **vars(_position(source, start, origin)))
    tokens.append(Token("end", "", _position(source, n, origin)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], variables: tuple[str, ...]) -> None:
        self.tokens = tokens
        self.i = 0
        self.variables = variables

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def _fail(self, message: str, tok: Token) -> ExprError:
        return ExprError(message, line=tok.pos.line, col=tok.pos.col)

    def take(self, kind: str) -> Token:
        tok = self.peek
        if tok.kind != kind:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self._fail(f"expected {kind!r}, found {found}", tok)
        self.i += 1
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while self.peek.kind in ("+", "-"):
            tok = self.take(self.peek.kind)
            node = BinOp(tok.kind, node, self.term(), pos=tok.pos)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek.kind in ("*", "/"):
            tok = self.take(self.peek.kind)
            node = BinOp(tok.kind, node, self.unary(), pos=tok.pos)
        return node

    def unary(self) -> Expr:
        if self.peek.kind == "-":
            tok = self.take("-")
            return Neg(self.unary(), pos=tok.pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek.kind == "^":
            tok = self.take("^")
            return BinOp("^", base, self.unary(), pos=tok.pos)
        return base

    def atom(self) -> Expr:
        tok = self.peek
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text), pos=tok.pos)
        if tok.kind == "(":
            self.take("(")
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "ident":
            self.i += 1
            return self._identifier(tok)
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self._fail(f"expected a number, name or '(', found {found}", tok)

    def _identifier(self, tok: Token) -> Expr:
        name = tok.text
        if name in FUNCTIONS:
            arity = FUNCTIONS[name][0]
            self.take("(")
            args = [self.expr()]
            while self.peek.kind == ",":
                self.take(",")
                args.append(self.expr())
            self.take(")")
            if len(args) != arity:
                raise self._fail(f"{name} takes {arity} argument(s), got {len(args)}", tok)
            return Call(name, tuple(args), pos=tok.pos)
        if name in CONSTANTS:
            return Const(name, pos=tok.pos)
        if name in self.variables:
            return Var(name, pos=tok.pos)
        if name in VARIABLES:
            raise self._fail(f"variable {name!r} is not available here; allowed: {', '.join(self.variables)}", tok)
        raise self._fail(f"unknown identifier {name!r}", tok)


def parse_expr(source: str, *, variables: tuple[str, ...] = VARIABLES, origin: Pos = Pos(1, 1)) -> Expr:
    """Parse one expression; ``origin`` shifts reported positions when the text sits inside a file."""
    parser = _Parser(tokenize(source, origin=origin), variables)
    node = parser.expr()
    parser.take("end")
    return node


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY = 3
_ATOM = 5


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _UNARY
    return _ATOM


def _wrap(node: Expr, needed: int) -> str:
    text = to_source(node)
    return f"({text})" if _prec(node) < needed else text


def to_source(node: Expr) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _UNARY)
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    if node.op == "^":
        return f"{_wrap(node.left, _ATOM)}^{_wrap(node.right, _UNARY)}"
    level = _PREC[node.op]
    return f"{_wrap(node.left, level)} {node.op} {_wrap(node.right, level + 1)}"


def _raise_at(node: Expr, message: str) -> ExprError:
    return ExprError(message, line=node.pos.line, col=node.pos.col)


def evaluate(node: Expr, env: dict[str, np.ndarray]) -> np.ndarray:
    """Vectorized evaluation over numpy arrays bound to the variable names in ``env``."""
    if isinstance(node, Num):
        return np.asarray(node.value)
    if isinstance(node, Const):
        return np.asarray(CONSTANTS[node.name])
    if isinstance(node, Var):
        try:
            return np.asarray(env[node.name], dtype=float)
        except KeyError:
            raise _raise_at(node, f"variable {node.name!r} is unbound") from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        args = [evaluate(a, env) for a in node.args]
        if node.name == "sqrt" and np.any(args[0] < 0.0):
            raise _raise_at(node, "sqrt of a negative value")
        with np.errstate(all="ignore"):
            return FUNCTIONS[node.name][1](*args)
    left = evaluate(node.left, env)
    right = evaluate(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(right == 0.0):
            raise _raise_at(node, "division by zero")
        return left / right
    if np.any((left < 0.0) & (right != np.round(right))):
        raise _raise_at(node, "fractional power of a negative value")
    with np.errstate(all="ignore"):
        return np.power(left, right)


def compile_expr(node: Expr, variables: tuple[str, ...]) -> Callable[..., np.ndarray]:
    """Positional callable over ``variables``; result broadcast to the inputs' shape."""

    def fn(*args: np.ndarray) -> np.ndarray:
        env = dict(zip(variables, args))
        shape = np.broadcast(*args).shape if args else ()
        value = np.asarray(evaluate(node, env))
        if np.iscomplexobj(value):
            if np.any(value.imag != 0.0):
                raise _raise_at(node, "expression has a non-real value")
            value = value.real
        return np.broadcast_to(value, shape).astype(float)

    fn.__name__ = "expr_" + "_".join(variables)
    fn.__qualname__ = fn.__name__
    return fn
