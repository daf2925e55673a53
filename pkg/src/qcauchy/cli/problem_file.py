"""Problem-definition files.

A file is a list of ``key = value`` lines; ``#`` starts a comment. Example::

    kind = hilfer
    q = 0.5
    alpha = 0.7
    beta = 0.25
    a = 0.5
    b = 2
    initial = 0
    rhs = builtin:example-5.2
    lam = 1

Keys: ``kind`` (``rl`` or ``hilfer``), ``q``, ``alpha``, ``beta``, ``a``,
``b``, ``initial`` (comma-separated), ``rhs`` (``builtin:<name>`` or an
expression in ``x`` and ``y``), ``lipschitz`` (a number or ``estimate``),
``tol``, ``max_iters``, ``grid_depth``. Two extra keys: ``lam`` is the
parameter of the builtin problems, and ``y_range`` (``lo, hi``) is the
band sampled by ``lipschitz = estimate``.

For a builtin right-hand side, ``a`` is the parameter of the reference
problem and the solver's left end is ``q a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from qcauchy.cli.expr import Expr, ExprSyntaxError, compile_expression, parse_expression, to_source
from qcauchy.errors import QCalcError, QDomainError
from qcauchy.qcore import FractionalOrder, QContext
from qcauchy.reference import by_name
from qcauchy.solver import CauchyProblem, ProblemKind, estimate_lipschitz

BUILTIN_PREFIX = "builtin:"
KEYS = (
    "kind", "q", "alpha", "beta", "a", "b", "initial", "rhs", "lipschitz",
    "tol", "max_iters", "grid_depth", "lam", "y_range",
)
REQUIRED = ("kind", "q", "alpha", "a", "b", "rhs")


class ProblemFileError(QCalcError, ValueError):
    """A syntax or range error in a problem file, with its location."""

    def __init__(self, message: str, line: int = 0, column: int = 0, key: str | None = None):
        where = f"{line}:{column}: " if line else ""
        what = f"{key}: " if key else ""
        super().__init__(f"{where}{what}{message}")
        self.message = message
        self.line = line
        self.column = column
        self.key = key


@dataclass(frozen=True)
class ProblemSpec:
    """The parsed document, before it is turned into a :class:`CauchyProblem`."""

    kind: ProblemKind
    q: float
    alpha: float
    a: float
    b: float
    rhs: str | Expr  # builtin name or expression tree
    beta: float = 0.0
    initial: tuple[float, ...] | None = None
    lipschitz: float | None = None  # None means "estimate" or, for builtins, the reference value
    tol: float | None = None
    max_iters: int | None = None
    grid_depth: int | None = None
    lam: float = 1.0
    y_range: tuple[float, float] = (-1.0, 1.0)
    max_terms: int | None = field(default=None, compare=False)

    @property
    def builtin(self) -> str | None:
        return self.rhs if isinstance(self.rhs, str) else None


def _number(text: str, key: str, line: int, col: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ProblemFileError(f"expected a number, got {text!r}", line, col, key) from None
    if not math.isfinite(v):
        raise ProblemFileError(f"expected a finite number, got {text!r}", line, col, key)
    return v


def _integer(text: str, key: str, line: int, col: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ProblemFileError(f"expected an integer, got {text!r}", line, col, key) from None


def _numbers(text: str, key: str, line: int, col: int) -> tuple[float, ...]:
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    if not body.strip():
        return ()
    return tuple(_number(part.strip(), key, line, col) for part in body.split(","))


def parse_problem_spec(text: str) -> ProblemSpec:
    raw: dict[str, tuple[str, int, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ProblemFileError("expected 'key = value'", lineno, col)
        key_part, value = body.split("=", 1)
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        if key not in KEYS:
            raise ProblemFileError(f"unknown key {key!r}; known keys: {', '.join(KEYS)}", lineno, kcol)
        if key in raw:
            raise ProblemFileError("duplicate key", lineno, kcol, key)
        vcol = len(key_part) + 2 + len(value) - len(value.lstrip())
        raw[key] = (value.strip(), lineno, vcol)
    for key in REQUIRED:
        if key not in raw:
            raise ProblemFileError("missing required key", key=key)

    def num(key: str, default=None):
        if key not in raw:
            return default
        return _number(raw[key][0], key, *raw[key][1:])

    def whole(key: str):
        if key not in raw:
            return None
        return _integer(raw[key][0], key, *raw[key][1:])

    kind_text, kline, kcol = raw["kind"]
    try:
        kind = ProblemKind(kind_text.lower())
    except ValueError:
        raise ProblemFileError(f"expected 'rl' or 'hilfer', got {kind_text!r}", kline, kcol, "kind") from None

    rhs_text, rline, rcol = raw["rhs"]
    if rhs_text.startswith(BUILTIN_PREFIX):
        rhs: str | Expr = rhs_text[len(BUILTIN_PREFIX):].strip()
    else:
        try:
            rhs = parse_expression(rhs_text, rline, rcol)
        except ExprSyntaxError as exc:
            raise ProblemFileError(exc.message, exc.line, exc.column, "rhs") from None

    lipschitz = None
    if "lipschitz" in raw and raw["lipschitz"][0].lower() != "estimate":
        lipschitz = num("lipschitz")
    initial = None
    if "initial" in raw:
        initial = _numbers(raw["initial"][0], "initial", *raw["initial"][1:])
    y_range = (-1.0, 1.0)
    if "y_range" in raw:
        y_range = _numbers(raw["y_range"][0], "y_range", *raw["y_range"][1:])
        if len(y_range) != 2 or not y_range[0] < y_range[1]:
            raise ProblemFileError("expected 'lo, hi' with lo < hi", *raw["y_range"][1:], key="y_range")

    spec = ProblemSpec(
        kind=kind,
        q=num("q"),
        alpha=num("alpha"),
        a=num("a"),
        b=num("b"),
        rhs=rhs,
        beta=num("beta", 0.0),
        initial=initial,
        lipschitz=lipschitz,
        tol=num("tol"),
        max_iters=whole("max_iters"),
        grid_depth=whole("grid_depth"),
        lam=num("lam", 1.0),
        y_range=y_range,
    )
    validate(spec, raw)
    return spec


def validate(spec: ProblemSpec, where: dict | None = None) -> None:
    """Range checks, each naming the offending key."""
    where = where or {}

    def fail(key: str, message: str):
        line, col = where[key][1:] if key in where else (0, 0)
        raise ProblemFileError(message, line, col, key)

    if not 0.0 < spec.q < 1.0:
        fail("q", f"must lie in (0, 1), got {spec.q}")
    if not spec.alpha > 0.0:
        fail("alpha", f"must be positive, got {spec.alpha}")
    if not 0.0 <= spec.beta <= 1.0:
        fail("beta", f"must lie in [0, 1], got {spec.beta}")
    if spec.kind is ProblemKind.RL and spec.beta != 0.0:
        fail("beta", "a Riemann-Liouville problem has beta = 0")
    if not spec.a >= 0.0:
        fail("a", f"must be non-negative, got {spec.a}")
    if not spec.b > spec.a:
        fail("b", f"must exceed a={spec.a}, got {spec.b}")
    n = FractionalOrder(spec.alpha, spec.beta).n
    if spec.initial is not None and len(spec.initial) != n:
        fail("initial", f"alpha={spec.alpha} needs {n} value(s), got {len(spec.initial)}")
    if spec.builtin is None and spec.initial is None:
        fail("initial", f"required for an expression right-hand side ({n} value(s))")
    if spec.lipschitz is not None and not spec.lipschitz > 0.0:
        fail("lipschitz", f"must be positive, got {spec.lipschitz}")
    if spec.tol is not None and not spec.tol > 0.0:
        fail("tol", f"must be positive, got {spec.tol}")
    if spec.max_iters is not None and spec.max_iters < 1:
        fail("max_iters", f"must be >= 1, got {spec.max_iters}")
    if spec.grid_depth is not None and spec.grid_depth < 1:
        fail("grid_depth", f"must be >= 1, got {spec.grid_depth}")
    if not spec.lam > 0.0:
        fail("lam", f"must be positive, got {spec.lam}")
    if spec.builtin is not None:
        if spec.kind is not ProblemKind.HILFER:
            fail("kind", f"builtin:{spec.builtin} is a hilfer problem")
        if spec.a <= 0.0:
            fail("a", f"builtin:{spec.builtin} needs a > 0")
        if spec.initial is not None and any(spec.initial):
            fail("initial", f"builtin:{spec.builtin} has zero initial data")
        try:
            by_name(spec.builtin)
        except QDomainError as exc:
            fail("rhs", str(exc))


def build_problem(spec: ProblemSpec) -> CauchyProblem:
    """Turn a validated spec into a :class:`CauchyProblem`."""
    ctx = QContext(spec.q, max_terms=spec.max_terms) if spec.max_terms else QContext(spec.q)
    overrides = {}
    if spec.tol is not None:
        overrides["solve_tol"] = spec.tol
    if spec.max_iters is not None:
        overrides["max_picard_iters"] = spec.max_iters
    if spec.grid_depth is not None:
        overrides["grid_depth"] = spec.grid_depth

    if spec.builtin is not None:
        ref = by_name(spec.builtin)(spec.q, spec.alpha, spec.beta, spec.lam, spec.a, spec.b, ctx=ctx)
        problem = ref.problem
        if spec.lipschitz is not None:
            overrides["lipschitz"] = spec.lipschitz
        return problem.replace(**overrides) if overrides else problem

    rhs = compile_expression(spec.rhs, ctx, spec.a)
    lipschitz = spec.lipschitz
    if lipschitz is None:
        lipschitz = estimate_lipschitz(rhs, spec.a, spec.b, *spec.y_range, ctx=ctx)
    return CauchyProblem(
        kind=spec.kind,
        order=FractionalOrder(spec.alpha, spec.beta),
        a=spec.a,
        b=spec.b,
        initial=spec.initial,
        rhs=rhs,
        lipschitz=lipschitz,
        ctx=ctx,
        **overrides,
    )


def parse_problem(text: str) -> CauchyProblem:
    return build_problem(parse_problem_spec(text))


def format_problem(spec: ProblemSpec) -> str:
    """Text that :func:`parse_problem_spec` reads back into an equal spec."""
    lines = [f"kind = {spec.kind.value}"]
    for key in ("q", "alpha", "beta", "a", "b"):
        lines.append(f"{key} = {getattr(spec, key)!r}")
    if spec.initial is not None:
        lines.append("initial = " + ", ".join(repr(v) for v in spec.initial))
    if spec.builtin is not None:
        lines.append(f"rhs = {BUILTIN_PREFIX}{spec.builtin}")
    else:
        lines.append(f"rhs = {to_source(spec.rhs)}")
    lines.append(f"lam = {spec.lam!r}")
    if spec.lipschitz is not None:
        lines.append(f"lipschitz = {spec.lipschitz!r}")
    elif spec.builtin is None:
        lines.append("lipschitz = estimate")
    for key in ("tol", "max_iters", "grid_depth"):
        value = getattr(spec, key)
        if value is not None:
            lines.append(f"{key} = {value!r}")
    lines.append(f"y_range = {spec.y_range[0]!r}, {spec.y_range[1]!r}")
    return "\n".join(lines) + "\n"
