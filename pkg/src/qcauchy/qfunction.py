"""Geometric grids, the Jackson integral and integer-order q-derivatives."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qcauchy.errors import ConvergenceWarning, NonFiniteError, QDomainError
from qcauchy.qcore import QContext

RealFunction1 = Callable[[float], float]

# Relative slack when deciding whether a point sits on a q-orbit.
ORBIT_TOL = 1e-9


def orbit_index(x: float, anchor: float, q: float) -> float:
    """Real ``m`` with ``x = anchor * q**m``."""
    return math.log(x / anchor) / math.log(q)


def orbit_steps(x: float, a: float, q: float) -> int | None:
    """``N`` with ``a = x * q**N`` when ``a`` lies on the orbit of ``x``, else None."""
    if a <= 0.0 or x <= 0.0:
        return None
    m = orbit_index(a, x, q)
    r = round(m)
    if abs(m - r) <= ORBIT_TOL * max(1.0, abs(m)):
        return int(r)
    return None


@dataclass(frozen=True)
class QGrid:
    """The orbit ``anchor * q**m``, ``m = 0..depth``, running down toward ``left_end``.

    With ``left_end > 0`` the last point equals ``left_end`` exactly; with
    ``left_end == 0`` the orbit is cut where ``q**depth`` falls below the
    series tolerance.
    """

    anchor: float
    ctx: QContext
    depth: int
    left_end: float = 0.0
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.anchor > 0.0:
            raise QDomainError(f"grid anchor must be positive, got {self.anchor!r}")
        if self.depth < 1:
            raise QDomainError(f"grid depth must be >= 1, got {self.depth!r}")
        if self.left_end < 0.0:
            raise QDomainError("left end must be non-negative")
        pts = self.anchor * self.ctx.q ** np.arange(self.depth + 1)
        if self.left_end > 0.0:
            pts[-1] = self.left_end
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def over(cls, a: float, b: float, ctx: QContext) -> QGrid:
        """Grid covering ``(a, b]``.

        For ``a > 0`` the grid is the orbit of ``a`` itself, so its top point
        is the largest ``a * q**-m`` not exceeding ``b``; that is ``b`` when
        ``b`` already lies on the orbit of ``a``.
        """
        if not 0.0 <= a < b:
            raise QDomainError(f"need 0 <= a < b, got a={a}, b={b}")
        q = ctx.q
        if a == 0.0:
            depth = max(1, ctx.terms_for(1.0))
            return cls(b, ctx, depth, 0.0)
        steps = orbit_steps(b, a, q)
        if steps is None:
            steps = math.floor(orbit_index(a, b, q))
        if steps < 1:
            raise QDomainError(f"no q-orbit point of a={a} lies in (a, {b}] for q={q}")
        return cls(a * q ** (-steps), ctx, steps, a)

    @property
    def q(self) -> float:
        return self.ctx.q

    @property
    def interior(self) -> np.ndarray:
        """Points strictly above the left end."""
        if self.left_end > 0.0:
            return self.points[:-1]
        return self.points

    @property
    def size(self) -> int:
        return len(self.interior)

    def index_of(self, x: float) -> int:
        m = orbit_index(x, self.anchor, self.q)
        j = round(m)
        if abs(m - j) > ORBIT_TOL * max(1.0, abs(m)) or not 0 <= j <= self.depth:
            raise QDomainError(f"x={x} is not a point of this grid")
        return int(j)


@dataclass(frozen=True)
class GridFunction:
    """Real values attached to the interior points of a :class:`QGrid`."""

    grid: QGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise QDomainError(
                f"expected {self.grid.size} values for this grid, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFiniteError("grid function values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, f: RealFunction1, grid: QGrid) -> GridFunction:
        return cls(grid, np.array([f(float(x)) for x in grid.interior]))

    @property
    def points(self) -> np.ndarray:
        return self.grid.interior

    def at(self, x: float) -> float:
        j = self.grid.index_of(x)
        if j >= self.grid.size:
            raise QDomainError(f"x={x} is the left end, where no value is stored")
        return float(self.values[j])

    def __call__(self, x: float) -> float:
        return self.at(x)


def jackson_series(f: RealFunction1, a: float, ctx: QContext) -> tuple[float, float]:
    """Jackson integral over ``[0, a]`` together with an estimate of the dropped tail."""
    if a == 0.0:
        return 0.0, 0.0
    q = ctx.q
    total = 0.0
    scale = 0.0
    prev = math.inf
    qm = 1.0
    for m in range(ctx.max_terms):
        term = qm * f(a * qm)
        if not math.isfinite(term):
            raise NonFiniteError(f"Jackson summand at t={a * qm!r} is not finite")
        total += term
        scale = max(scale, abs(total), abs(term))
        small = abs(term) <= ctx.series_tol * scale
        if m >= 2 and small and abs(prev) <= ctx.series_tol * scale:
            ratio = abs(term / prev) if prev != 0.0 else q
            ratio = min(ratio, 0.99)
            tail = abs(term) * ratio / (1.0 - ratio)
            return (1.0 - q) * a * total, (1.0 - q) * abs(a) * tail
        prev = term
        qm *= q
    warnings.warn(
        f"Jackson series reached max_terms={ctx.max_terms} with last term {prev:.3e}",
        ConvergenceWarning,
        stacklevel=2,
    )
    tail = abs(prev) * q / (1.0 - q)
    return (1.0 - q) * a * total, (1.0 - q) * abs(a) * tail


def jackson_integral_zero(f: RealFunction1, a: float, ctx: QContext) -> float:
    """``(1 - q) a sum_m q^m f(a q^m)``."""
    return jackson_series(f, a, ctx)[0]


def jackson_integral(f: RealFunction1, a: float, b: float, ctx: QContext) -> float:
    """Jackson integral over ``[a, b]`` as the difference of two zero-anchored sums.

    When ``a`` lies on the orbit of ``b`` the two infinite tails cancel term by
    term and only the finite sum over ``b q^m > a`` is formed, so ``f`` is
    never sampled below ``a``.
    """
    if a < 0.0 or b <= 0.0:
        raise QDomainError(f"need 0 <= a and b > 0, got a={a}, b={b}")
    if a == b:
        return 0.0
    if a == 0.0:
        return jackson_integral_zero(f, b, ctx)
    steps = orbit_steps(b, a, ctx.q) if a < b else None
    if steps is not None:
        q = ctx.q
        total = 0.0
        for m in range(steps):
            term = q**m * f(b * q**m)
            if not math.isfinite(term):
                raise NonFiniteError(f"Jackson summand at t={b * q**m!r} is not finite")
            total += term
        return (1.0 - q) * b * total
    return jackson_integral_zero(f, b, ctx) - jackson_integral_zero(f, a, ctx)


def q_derivative(f: RealFunction1, x: float, ctx: QContext) -> float:
    if x == 0.0:
        raise QDomainError("the q-derivative is undefined at x = 0")
    q = ctx.q
    return (f(x) - f(q * x)) / (x * (1.0 - q))


def difference_weights(n: int, ctx: QContext) -> np.ndarray:
    """Coefficients ``d_k`` with ``D_q^n f(x) = x**-n * sum_k d_k f(x q^k)``."""
    q = ctx.q
    d = np.zeros(n + 1)
    d[0] = 1.0
    for j in range(n):
        nxt = d.copy()
        nxt[1:] -= q ** (-j) * d[:-1]
        d = nxt / (1.0 - q)
    return d


def q_derivative_n(f: RealFunction1, x: float, n: int, ctx: QContext) -> float:
    if n < 0:
        raise QDomainError(f"derivative order must be >= 0, got {n}")
    if n == 0:
        return f(x)
    if x == 0.0:
        raise QDomainError("the q-derivative is undefined at x = 0")
    d = difference_weights(n, ctx)
    q = ctx.q
    samples = np.array([f(x * q**k) for k in range(n + 1)])
    return float(np.dot(d, samples)) / x**n


def fundamental_theorem_check(
    f: RealFunction1, a: float, b: float, ctx: QContext
) -> tuple[float, float]:
    """Both sides of ``int_a^b D_q f d_q x = f(b) - f(a)``."""
    if not 0.0 < a < b:
        raise QDomainError(f"need 0 < a < b, got a={a}, b={b}")
    lhs = jackson_integral(lambda t: q_derivative(f, t, ctx), a, b, ctx)
    return lhs, f(b) - f(a)


def lq_norm(f: RealFunction1, a: float, b: float, ctx: QContext, p: float = 1.0) -> float:
    """The ``L^p_q[a, b]`` norm ``(int_a^b |f|^p d_q x)^(1/p)``."""
    return jackson_integral(lambda t: abs(f(t)) ** p, a, b, ctx) ** (1.0 / p)
