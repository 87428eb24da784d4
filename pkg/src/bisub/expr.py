"""Closed-form scalar expressions in chart coordinates.

Grammar (see ``docs/grammar.ebnf``)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = ("-" | "+") unary | power ;
    power    = atom [ "^" exponent ] ;
    exponent = [ "-" ] integer | "(" [ "-" ] integer ")" ;
    atom     = number | identifier | function "(" expr ")" | "(" expr ")" ;

Identifiers are the coordinates ``x``, ``y``, ``z`` or declared parameters.
Functions are ``exp``, ``ln``, ``sqrt``, ``sin`` and ``cos``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .jet import Jet, variables

COORDS = ("x", "y", "z")
FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos")


class ExprError(ValueError):
    """Base class for parse errors; ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, text: str, offset: int):
        self.text = text
        self.offset = offset
        self.detail = message
        super().__init__(f"{message} at offset {offset} in {text!r}")


class ExprSyntaxError(ExprError):
    def __init__(self, text: str, offset: int, expected: Iterable[str], found: str):
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        super().__init__(
            f"syntax error: expected {' or '.join(self.expected)}, found {found}",
            text,
            offset,
        )


class UnknownIdentifier(ExprError):
    def __init__(self, text: str, offset: int, name: str):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", text, offset)


class NonIntegerExponent(ExprError):
    def __init__(self, text: str, offset: int):
        super().__init__("exponent must be an integer literal", text, offset)


class DomainError(ArithmeticError):
    """Evaluation left the domain of a subexpression (pole, log or sqrt of bad value)."""

    def __init__(self, reason: str, subexpr: str, point):
        self.reason = reason
        self.subexpr = subexpr
        self.point = tuple(float(v) for v in point)
        super().__init__(f"{reason} in {subexpr!r} at point {self.point}")


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Param, Neg, BinOp, Pow, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


# --- tokenizer / parser ----------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str  # num, ident, op, end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    data = text.encode("utf-8")
    toks = []
    pos = 0
    src = text
    # work on the str, report byte offsets
    while True:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            rest = src[pos:]
            if rest.strip() == "":
                break
            lead = len(rest) - len(rest.lstrip())
            off = len(src[: pos + lead].encode("utf-8"))
            raise ExprSyntaxError(text, off, ["operand", "operator"], repr(rest.lstrip()[0]))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), len(src[:start].encode("utf-8"))))
        pos = m.end()
    toks.append(_Tok("end", "", len(data)))
    return toks


class _Parser:
    def __init__(self, text: str, params: frozenset[str]):
        self.text = text
        self.params = params
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _describe(self, t: _Tok) -> str:
        return "end of input" if t.kind == "end" else repr(t.text)

    def fail(self, expected: Iterable[str]):
        raise ExprSyntaxError(self.text, self.tok.offset, expected, self._describe(self.tok))

    def accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.fail(["operator", "end of input"])
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = self.accept("(")
        neg = self.accept("-")
        t = self.tok
        if t.kind != "num":
            if t.kind in ("ident",) or (t.kind == "op" and t.text == "("):
                raise NonIntegerExponent(self.text, t.offset)
            self.fail(["integer"])
        if not re.fullmatch(r"\d+", t.text):
            raise NonIntegerExponent(self.text, t.offset)
        self.i += 1
        if paren and not self.accept(")"):
            if self.tok.kind == "end" or self.tok.text == ")":
                self.fail(["')'"])
            raise NonIntegerExponent(self.text, self.tok.offset)
        k = int(t.text)
        return -k if neg else k

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "ident":
            self.i += 1
            name = t.text
            if name in FUNCTIONS:
                if not self.accept("("):
                    self.fail(["'('"])
                arg = self.expr()
                if not self.accept(")"):
                    self.fail(["')'", "operator"])
                return Call(name, arg)
            if name in COORDS:
                return Var(name)
            if name in self.params:
                return Param(name)
            raise UnknownIdentifier(self.text, t.offset, name)
        if self.accept("("):
            e = self.expr()
            if not self.accept(")"):
                self.fail(["')'", "operator"])
            return e
        self.fail(["operand"])


def parse(text: str, params: Iterable[str] = ()) -> Expr:
    """Parse ``text``; ``params`` are the declared parameter names."""
    params = frozenset(params)
    bad = params & (set(COORDS) | set(FUNCTIONS))
    if bad:
        raise ValueError(f"parameter names shadow reserved words: {sorted(bad)}")
    return _Parser(text, params).parse()


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_string(e: Expr) -> str:
    """Render with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        if e.value < 0 or not np.isfinite(e.value):
            raise ValueError(f"literal {e.value!r} has no source form")
        return repr(float(e.value))
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.operand)
        if isinstance(e.operand, BinOp):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) < 5:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left = to_string(e.left)
        right = to_string(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


def free_names(e: Expr) -> set[str]:
    if isinstance(e, (Var, Param)):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return free_names(e.operand if isinstance(e, Neg) else e.arg)
    if isinstance(e, Pow):
        return free_names(e.base)
    return free_names(e.left) | free_names(e.right)


# --- evaluation ------------------------------------------------------------


class _Evaluator:
    def __init__(self, point, params: Mapping[str, float], order: int):
        self.point = np.asarray(point, dtype=float)
        if self.point.shape[-1:] != (3,):
            raise ValueError(f"point must have trailing dimension 3, got {self.point.shape}")
        self.params = params
        self.order = order
        self.batch = self.point.shape[:-1]
        self.vars = dict(zip(COORDS, variables(self.point, order)))

    def _where(self, mask) -> np.ndarray:
        mask = np.asarray(mask)
        if mask.ndim == 0:
            return self.point
        first = np.unravel_index(np.flatnonzero(mask)[0], mask.shape)
        return self.point[first]

    def domain(self, bad, reason: str, e: Expr):
        if np.any(bad):
            raise DomainError(reason, to_string(e), self._where(bad))

    def const(self, v) -> Jet:
        return Jet.constant(v, self.order, self.batch)

    def ev(self, e: Expr) -> Jet:
        if isinstance(e, Num):
            return self.const(e.value)
        if isinstance(e, Var):
            return self.vars[e.name]
        if isinstance(e, Param):
            try:
                return self.const(float(self.params[e.name]))
            except KeyError:
                raise KeyError(f"parameter {e.name!r} has no value") from None
        if isinstance(e, Neg):
            return -self.ev(e.operand)
        if isinstance(e, BinOp):
            a, b = self.ev(e.left), self.ev(e.right)
            if e.op == "+":
                out = a + b
            elif e.op == "-":
                out = a - b
            elif e.op == "*":
                out = a * b
            else:
                self.domain(b.coeffs[0] == 0.0, "division by zero", e)
                out = a / b
        elif isinstance(e, Pow):
            a = self.ev(e.base)
            if e.exponent < 0:
                self.domain(a.coeffs[0] == 0.0, "negative power of zero", e)
            out = a**e.exponent
        elif isinstance(e, Call):
            a = self.ev(e.arg)
            v = a.coeffs[0]
            if e.func == "ln":
                self.domain(v <= 0.0, "logarithm of non-positive value", e)
                out = a.log()
            elif e.func == "sqrt":
                bad = v < 0.0 if self.order == 0 else v <= 0.0
                self.domain(bad, "square root of negative value" if self.order == 0
                            else "square root not differentiable at or below zero", e)
                out = a.sqrt()
            elif e.func == "exp":
                out = a.exp()
            elif e.func == "sin":
                out = a.sin()
            else:
                out = a.cos()
        else:
            raise TypeError(f"not an expression node: {e!r}")
        self.domain(~np.all(np.isfinite(out.coeffs), axis=0), "non-finite result", e)
        return out


def eval_jet(e: Expr, point, params: Mapping[str, float] | None = None, order: int = 3) -> Jet:
    """Evaluate ``e`` with all partials up to ``order`` at ``point``.

    ``point`` may be a single (x, y, z) triple or an array with trailing
    dimension 3, in which case the jet carries the leading batch shape.
    """
    with np.errstate(all="ignore"):
        return _Evaluator(point, params or {}, order).ev(e)


def evaluate(e: Expr, point, params: Mapping[str, float] | None = None):
    return eval_jet(e, point, params, order=0).value
