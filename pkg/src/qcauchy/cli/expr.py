"""A small expression language for right-hand sides ``f(x, y)``.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          exponent must not mention x or y
    atom   := NUMBER | "x" | "y" | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Functions: ``sqrt(e)``, ``abs(e)``, ``qgamma(c)`` and ``qpow(m, nu)``, the
q-power ``(x - m a)_q^nu`` with ``a`` the problem's left end. Arguments of
``qgamma`` and ``qpow`` must be constant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

from qcauchy.errors import QCalcError, QDomainError
from qcauchy.qcore import QContext, q_gamma, q_power

VARIABLES = ("x", "y")
# name -> (arity, arguments that must be constant)
FUNCTIONS = {
    "sqrt": (1, ()),
    "abs": (1, ()),
    "qgamma": (1, (0,)),
    "qpow": (2, (0, 1)),
}


class ExprSyntaxError(QCalcError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ExprEvalError(QCalcError, ArithmeticError):
    """Evaluation left the domain of an operation (division by zero, sqrt of a negative, ...)."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    line: int
    column: int


_TOKEN = re.compile(
    r"(?P<ws>[ \t]+)|(?P<nl>\r?\n)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("end", "", line, pos - line_start + 1))
    return out


def mentions_variables(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Num):
        return False
    if isinstance(e, Neg):
        return mentions_variables(e.operand)
    if isinstance(e, BinOp):
        return mentions_variables(e.left) or mentions_variables(e.right)
    return any(mentions_variables(a) for a in e.args)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ExprSyntaxError(message, tok.line, tok.column)

    def take(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.take(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.take("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            caret = self.tok
            self.i += 1
            expo = self.unary()
            if mentions_variables(expo):
                self.error("exponent must be a constant", caret)
            return BinOp("^", base, expo)
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text not in FUNCTIONS:
                self.error(f"unknown name {tok.text!r}; allowed: x, y, {', '.join(FUNCTIONS)}", tok)
            return self.call(tok)
        if self.take("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"expected a number, variable or '(' but found {tok.text or 'end of input'!r}")

    def call(self, name_tok: Token) -> Call:
        arity, const_args = FUNCTIONS[name_tok.text]
        self.expect("(")
        args = [self.expr()]
        while self.take(","):
            args.append(self.expr())
        self.expect(")")
        if len(args) != arity:
            self.error(f"{name_tok.text} takes {arity} argument(s), got {len(args)}", name_tok)
        for k in const_args:
            if mentions_variables(args[k]):
                self.error(f"argument {k + 1} of {name_tok.text} must be a constant", name_tok)
        return Call(name_tok.text, tuple(args))


def parse_expression(text: str, line: int = 1, column: int = 1) -> Expr:
    """Parse ``text``; error positions are reported relative to ``line:column``."""
    try:
        return _Parser(tokenize(text)).parse()
    except ExprSyntaxError as exc:
        col = exc.column + column - 1 if exc.line == 1 else exc.column
        raise ExprSyntaxError(exc.message, exc.line + line - 1, col) from None


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(e: Expr) -> str:
    """Canonical text of ``e``; parsing it gives back an equal tree."""
    return _src(e, 0)


def _src(e: Expr, outer: int) -> str:
    if isinstance(e, Num):
        text = repr(e.value)
        return f"({text})" if e.value < 0 or text in ("inf", "nan") else text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_src(a, 0) for a in e.args)})"
    if isinstance(e, Neg):
        text = "-" + _src(e.operand, 3)
        return f"({text})" if outer >= 3 else text
    p = _PREC[e.op]
    if e.op == "^":
        text = f"{_src(e.left, 5)}^{_src(e.right, 3)}"
    else:
        # left-associative: the right operand needs parentheses at equal precedence
        text = f"{_src(e.left, p)} {e.op} {_src(e.right, p + 1)}"
    return f"({text})" if p < outer else text


RealFunction2 = Callable[[float, float], float]


def _const(e: Expr, ctx: QContext, a: float) -> float:
    return compile_expression(e, ctx, a)(0.0, 0.0)


def compile_expression(e: Expr, ctx: QContext, a: float) -> RealFunction2:
    """Turn ``e`` into a closure ``(x, y) -> float``; ``a`` is the left end used by ``qpow``."""
    if isinstance(e, Num):
        v = e.value
        return lambda x, y: v
    if isinstance(e, Var):
        return (lambda x, y: x) if e.name == "x" else (lambda x, y: y)
    if isinstance(e, Neg):
        inner = compile_expression(e.operand, ctx, a)
        return lambda x, y: -inner(x, y)
    if isinstance(e, BinOp):
        return _compile_binop(e, ctx, a)
    return _compile_call(e, ctx, a)


def _compile_binop(e: BinOp, ctx: QContext, a: float) -> RealFunction2:
    left = compile_expression(e.left, ctx, a)
    right = compile_expression(e.right, ctx, a)
    if e.op == "+":
        return lambda x, y: left(x, y) + right(x, y)
    if e.op == "-":
        return lambda x, y: left(x, y) - right(x, y)
    if e.op == "*":
        return lambda x, y: left(x, y) * right(x, y)
    if e.op == "/":

        def div(x: float, y: float) -> float:
            den = right(x, y)
            if den == 0.0:
                raise ExprEvalError(f"division by zero at x={x}, y={y}")
            return left(x, y) / den

        return div

    expo = _const(e.right, ctx, a)

    def pw(x: float, y: float) -> float:
        base = left(x, y)
        try:
            out = base**expo
        except (ZeroDivisionError, OverflowError) as exc:
            raise ExprEvalError(f"{base}^{expo} failed at x={x}, y={y}: {exc}") from None
        if isinstance(out, complex):
            raise ExprEvalError(f"{base}^{expo} is not real (x={x}, y={y})")
        return out

    return pw


def _compile_call(e: Call, ctx: QContext, a: float) -> RealFunction2:
    if e.name == "qgamma":
        c = _const(e.args[0], ctx, a)
        try:
            v = q_gamma(c, ctx)
        except QCalcError as exc:
            raise ExprEvalError(f"qgamma({c}): {exc}") from None
        return lambda x, y: v
    if e.name == "qpow":
        m = _const(e.args[0], ctx, a)
        nu = _const(e.args[1], ctx, a)
        shift = m * a

        def qp(x: float, y: float) -> float:
            try:
                return q_power(x, shift, nu, ctx)
            except (QDomainError, ZeroDivisionError) as exc:
                raise ExprEvalError(f"qpow({m}, {nu}) at x={x}: {exc}") from None

        return qp
    arg = compile_expression(e.args[0], ctx, a)
    if e.name == "abs":
        return lambda x, y: abs(arg(x, y))

    def sq(x: float, y: float) -> float:
        v = arg(x, y)
        if v < 0.0:
            raise ExprEvalError(f"sqrt of negative value {v} at x={x}, y={y}")
        return math.sqrt(v)

    return sq
