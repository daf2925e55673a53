r"""Fractional q-integrals and q-derivatives on geometric orbits.

Every operator here is evaluated on the orbit :math:`x_j = x_0 q^j`. On that
orbit the Riemann-Liouville kernel only depends on the index offset:

.. math::

    (I^\nu F)(x_j) = x_j^\nu \sum_{m \ge 0} c_m(\nu) F(x_{j+m}), \qquad
    c_m(\nu) = (1-q)^\nu q^m \frac{(q^\nu; q)_m}{(q; q)_m},

with the sum stopping at the last orbit point above the left end ``a``. For
``a > 0`` this requires ``x_0`` to lie on the orbit of ``a``; the identities
of the calculus fail for fractional powers otherwise. For ``a = 0`` the orbit
is infinite and is truncated adaptively.

At the left end and below it, inner fractional integrals take the value of
the q-Taylor polynomial built from the initial data (zero by default), which
is what the empty Jackson sum gives for functions whose fractional integrals
vanish at ``a``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from qcauchy.errors import ConvergenceWarning, NonFiniteError, QDomainError
from qcauchy.qcore import FractionalOrder, QContext, ceil_order, q_factorial, q_gamma, q_power
from qcauchy.qfunction import GridFunction, QGrid, RealFunction1, difference_weights, orbit_steps

# Operator exponents below this are treated as exactly zero (identity).
ZERO_ORDER_TOL = 1e-14

Sampler = Callable[[int], np.ndarray]


class OperatorKind(Enum):
    RL_INTEGRAL = "rl_integral"
    RL_DERIVATIVE = "rl_derivative"
    CAPUTO = "caputo"
    HILFER = "hilfer"


@dataclass(frozen=True)
class OperatorRequest:
    """A fully specified fractional operator, callable on functions."""

    kind: OperatorKind
    order: FractionalOrder
    left_end: float
    ctx: QContext

    def __post_init__(self) -> None:
        if self.left_end < 0.0:
            raise QDomainError("left end must be non-negative")
        if self.kind is OperatorKind.CAPUTO and self.order.alpha > 1.0:
            raise QDomainError("the Caputo q-derivative is implemented for 0 < alpha <= 1")

    def __call__(self, f: RealFunction1, x: float) -> float:
        alpha, a, ctx = self.order.alpha, self.left_end, self.ctx
        if self.kind is OperatorKind.RL_INTEGRAL:
            return rl_integral(f, alpha, a, x, ctx)
        if self.kind is OperatorKind.RL_DERIVATIVE:
            return rl_derivative(f, alpha, a, x, ctx)
        if self.kind is OperatorKind.CAPUTO:
            return caputo_derivative(f, alpha, a, x, ctx)
        return hilfer_derivative(f, self.order, a, x, ctx)


@functools.lru_cache(maxsize=256)
def _weights(nu: float, q: float, count: int) -> np.ndarray:
    m = np.arange(1, count)
    ratios = q * (1.0 - q ** (nu + m - 1)) / (1.0 - q**m)
    c = np.empty(count)
    c[0] = (1.0 - q) ** nu
    c[1:] = c[0] * np.cumprod(ratios)
    c.flags.writeable = False
    return c


def kernel_weights(nu: float, count: int, ctx: QContext) -> np.ndarray:
    """The coefficients ``c_m(nu)``, ``m < count``, of the orbit form of ``I^nu``."""
    return _weights(float(nu), ctx.q, int(count))


def _snap(nu: float) -> float:
    return 0.0 if abs(nu) < ZERO_ORDER_TOL else nu


def taylor_boundary(
    coeffs: Sequence[float], a: float, ctx: QContext
) -> Callable[[np.ndarray], np.ndarray] | None:
    """``x -> sum_k coeffs[k] (x - a)_q^k / [k]_q!`` or None when all coefficients vanish."""
    if not any(coeffs):
        return None
    facts = [q_factorial(k, ctx) for k in range(len(coeffs))]

    def poly(xs: np.ndarray) -> np.ndarray:
        return np.array(
            [
                sum(c * q_power(float(x), a, k, ctx) / facts[k] for k, c in enumerate(coeffs))
                for x in xs
            ]
        )

    return poly


class _Orbit:
    """The orbit ``x0 q^j`` together with the position of the left end."""

    def __init__(self, x0: float, a: float, ctx: QContext, limit: int | None = None):
        if not x0 > a:
            raise QDomainError(f"need x > a, got x={x0}, a={a}")
        self.x0 = x0
        self.a = a
        self.ctx = ctx
        self.q = ctx.q
        if a > 0.0:
            steps = orbit_steps(x0, a, ctx.q)
            if steps is None:
                raise QDomainError(
                    f"x={x0} is not on the q-orbit of the left end a={a} (q={ctx.q}); "
                    "fractional q-operators need x = a q^-N"
                )
            self.interior: int | None = steps
        else:
            self.interior = None
        # number of stored points when the orbit carries a fixed grid, else None
        self.limit = limit

    def points(self, count: int) -> np.ndarray:
        pts = self.x0 * self.q ** np.arange(count)
        if self.interior is not None and self.interior < count:
            pts[self.interior] = self.a
        return pts


def _sample(f: RealFunction1, orbit: _Orbit) -> Sampler:
    cache: list[float] = []

    def values(count: int) -> np.ndarray:
        if count > len(cache):
            pts = orbit.points(count)
            for x in pts[len(cache):]:
                v = float(f(float(x)))
                if not math.isfinite(v):
                    raise NonFiniteError(f"function value at x={x!r} is not finite")
                cache.append(v)
        return np.array(cache[:count])

    return values


def _from_values(values: np.ndarray, orbit: _Orbit, boundary) -> Sampler:
    stored = np.asarray(values, dtype=float)

    def sampler(count: int) -> np.ndarray:
        if count <= len(stored):
            return stored[:count].copy()
        extra = orbit.points(count)[len(stored):]
        if boundary is None:
            if orbit.interior is None:
                raise QDomainError("requested grid values beyond the truncated grid")
            tail = np.zeros(len(extra))
        else:
            tail = boundary(extra)
        return np.concatenate([stored, tail])

    return sampler


def _integrate(inner: Sampler, nu: float, orbit: _Orbit, boundary=None) -> Sampler:
    nu = _snap(nu)
    if nu == 0.0:
        return inner
    if nu < 0.0:
        raise QDomainError(f"fractional integral order must be >= 0, got {nu}")

    # on an a = 0 orbit the sums are cut; sampling one truncation length
    # deeper keeps the cut away from every value handed upward
    pad = orbit.ctx.terms_for(1.0) if orbit.interior is None and orbit.limit is None else 0

    def values(count: int) -> np.ndarray:
        # every sum runs down to the last point above a, whatever count is asked for
        span = count + pad if orbit.interior is None else orbit.interior
        m = min(count, span)
        out = np.empty(count)
        if m > 0:
            f = inner(span)
            c = kernel_weights(nu, span, orbit.ctx)
            # out_j = x_j^nu sum_k c_k f_{j+k}
            conv = np.convolve(f[::-1], c)[:span][::-1]
            out[:m] = orbit.points(m) ** nu * conv[:m]
        if m < count:
            extra = orbit.points(count)[m:]
            out[m:] = 0.0 if boundary is None else boundary(extra)
        return out

    return values


def _differentiate(inner: Sampler, n: int, orbit: _Orbit) -> Sampler:
    if n == 0:
        return inner
    d = difference_weights(n, orbit.ctx)

    def values(count: int) -> np.ndarray:
        g = inner(count + n)
        out = np.zeros(count)
        for k, dk in enumerate(d):
            out += dk * g[k : k + count]
        return out / orbit.points(count) ** n

    return values


def _top_value(build: Callable[[_Orbit], Sampler], orbit: _Orbit) -> float:
    """Value at ``x0`` of the operator tree ``build`` on ``orbit``."""
    sampler = build(orbit)
    if orbit.interior is not None:
        return float(sampler(1)[0])
    ctx = orbit.ctx
    depth = ctx.terms_for(1.0)
    # deepest count whose padded orbit stays well clear of underflow
    floor = int(math.log(1e-250 / orbit.x0) / math.log(orbit.q)) - 4 * depth
    accept = math.sqrt(ctx.series_tol)
    prev = float(sampler(depth)[0])
    while 2 * depth <= min(ctx.max_terms, floor):
        depth *= 2
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            cur = float(sampler(depth)[0])
        if not math.isfinite(cur):
            break
        if abs(cur - prev) <= accept * max(abs(cur), abs(prev)) or abs(cur - prev) <= ctx.series_tol:
            return cur
        prev = cur
    warnings.warn(
        f"orbit truncation did not settle within max_terms={ctx.max_terms}",
        ConvergenceWarning,
        stacklevel=3,
    )
    return prev


def _check_x(x: float, a: float) -> None:
    if a < 0.0:
        raise QDomainError("left end must be non-negative")
    if not x > a:
        raise QDomainError(f"evaluation point must exceed the left end, got x={x}, a={a}")


def rl_integral(f: RealFunction1, alpha: float, a: float, x: float, ctx: QContext) -> float:
    r"""Riemann-Liouville q-integral :math:`(I^\alpha_{q,a+} f)(x)`."""
    if not alpha > 0.0:
        raise QDomainError(f"alpha must be positive, got {alpha}")
    _check_x(x, a)
    orbit = _Orbit(x, a, ctx)
    return _top_value(lambda o: _integrate(_sample(f, o), alpha, o), orbit)


def rl_boundary_coeffs(alpha: float, initial: Sequence[float] | None) -> list[float]:
    """Taylor coefficients of ``I^(n-alpha) y`` at ``a``.

    ``initial[i]`` is the limit of ``D^(alpha-1-i) y`` at ``a``, so the
    coefficient of ``(x - a)_q^j / [j]_q!`` is ``initial[n-1-j]``.
    """
    n = ceil_order(alpha)
    if initial is None:
        return [0.0] * n
    if len(initial) != n:
        raise QDomainError(f"expected {n} initial values, got {len(initial)}")
    return [float(initial[n - 1 - j]) for j in range(n)]


def rl_derivative(
    f: RealFunction1,
    alpha: float,
    a: float,
    x: float,
    ctx: QContext,
    initial: Sequence[float] | None = None,
) -> float:
    """Riemann-Liouville q-derivative ``D_q^n I^(n - alpha) f`` with ``n = ceil(alpha)``.

    ``initial[i]`` holds the limit of ``D^(alpha-1-i) f`` at ``a``; these fix
    the inner integral at and below ``a``.
    """
    if not alpha > 0.0:
        raise QDomainError(f"alpha must be positive, got {alpha}")
    _check_x(x, a)
    n = ceil_order(alpha)
    orbit = _Orbit(x, a, ctx)
    boundary = taylor_boundary(rl_boundary_coeffs(alpha, initial), a, ctx)

    def build(o: _Orbit) -> Sampler:
        inner = _integrate(_sample(f, o), n - alpha, o, boundary)
        return _differentiate(inner, n, o)

    return _top_value(build, orbit)


def caputo_derivative(f: RealFunction1, alpha: float, a: float, x: float, ctx: QContext) -> float:
    """Caputo q-derivative ``I^(1 - alpha) D_q f`` for ``0 < alpha <= 1``."""
    if not 0.0 < alpha <= 1.0:
        raise QDomainError(f"Caputo order must lie in (0, 1], got {alpha}")
    _check_x(x, a)
    orbit = _Orbit(x, a, ctx)

    def build(o: _Orbit) -> Sampler:
        return _integrate(_differentiate(_sample(f, o), 1, o), 1.0 - alpha, o)

    return _top_value(build, orbit)


def hilfer_derivative(
    f: RealFunction1,
    order: FractionalOrder,
    a: float,
    x: float,
    ctx: QContext,
    initial: Sequence[float] | None = None,
) -> float:
    """Hilfer q-derivative ``I^(beta (n - alpha)) D_q^n I^((1 - beta)(n - alpha)) f``.

    ``initial`` holds the limits of ``D_q^k I^gamma f`` at ``a`` (``k < n``).
    """
    _check_x(x, a)
    orbit = _Orbit(x, a, ctx)
    boundary = taylor_boundary(_hilfer_coeffs(order, initial), a, ctx)

    def build(o: _Orbit) -> Sampler:
        inner = _integrate(_sample(f, o), order.gamma, o, boundary)
        return _integrate(_differentiate(inner, order.n, o), order.beta * (order.n - order.alpha), o)

    return _top_value(build, orbit)


def _hilfer_coeffs(order: FractionalOrder, initial: Sequence[float] | None) -> list[float]:
    if initial is None:
        return [0.0] * order.n
    if len(initial) != order.n:
        raise QDomainError(f"expected {order.n} initial values, got {len(initial)}")
    return [float(b) for b in initial]


def norm_bound(alpha: float, a: float, b: float, ctx: QContext) -> float:
    """Operator norm bound ``(b - q a)_q^alpha / Gamma_q(alpha + 1)`` of ``I^alpha`` on ``L^p_q[a, b]``."""
    if not 0.0 <= a < b:
        raise QDomainError(f"need 0 <= a < b, got a={a}, b={b}")
    if not alpha > 0.0:
        raise QDomainError(f"alpha must be positive, got {alpha}")
    return q_power(b, ctx.q * a, alpha, ctx) / q_gamma(alpha + 1.0, ctx)


def hilfer_initial_term(
    order: FractionalOrder, a: float, limits: Sequence[float], x: float, ctx: QContext
) -> float:
    """``sum_k b_k (x - a)_q^(k - gamma) / Gamma_q(k - gamma + 1)``."""
    if len(limits) != order.n:
        raise QDomainError(f"expected {order.n} initial values, got {len(limits)}")
    g = order.gamma
    return sum(
        b * q_power(x, a, k - g, ctx) / q_gamma(k - g + 1.0, ctx)
        for k, b in enumerate(limits)
        if b != 0.0
    )


def rl_initial_term(alpha: float, a: float, limits: Sequence[float], x: float, ctx: QContext) -> float:
    """``sum_{k=1..n} b_k (x - a)_q^(alpha - k) / Gamma_q(alpha - k + 1)`` with ``b_k = limits[k-1]``."""
    n = ceil_order(alpha)
    if len(limits) != n:
        raise QDomainError(f"expected {n} initial values, got {len(limits)}")
    return sum(
        b * q_power(x, a, alpha - k, ctx) / q_gamma(alpha - k + 1.0, ctx)
        for k, b in enumerate(limits, start=1)
        if b != 0.0
    )


# -- whole-grid versions used by the solver ---------------------------------


def _grid_orbit(grid: QGrid) -> _Orbit:
    return _Orbit(grid.anchor, grid.left_end, grid.ctx, limit=grid.size)


def rl_integral_grid(values: GridFunction, alpha: float) -> GridFunction:
    """``I^alpha`` of a grid function, evaluated at every interior grid point."""
    grid = values.grid
    orbit = _grid_orbit(grid)
    out = _integrate(_from_values(values.values, orbit, None), alpha, orbit)(grid.size)
    return GridFunction(grid, out)


def hilfer_derivative_grid(
    y: GridFunction, order: FractionalOrder, initial: Sequence[float] | None = None
) -> np.ndarray:
    """``D^(alpha, beta) y`` at every interior grid point.

    The inner integral is continued at and below the left end by the q-Taylor
    polynomial of ``initial``. On a truncated ``a = 0`` grid the orbit below
    the last point is taken as zero, so entries near the bottom are inexact.
    """
    grid = y.grid
    orbit = _grid_orbit(grid)
    boundary = taylor_boundary(_hilfer_coeffs(order, initial), grid.left_end, grid.ctx)
    base = _from_values(y.values, orbit, boundary)
    inner = _integrate(_safe(base, grid), order.gamma, orbit, boundary)
    outer = _integrate(
        _differentiate(_safe(inner, grid), order.n, orbit),
        order.beta * (order.n - order.alpha),
        orbit,
    )
    return outer(grid.size)


def rl_derivative_grid(
    y: GridFunction, alpha: float, initial: Sequence[float] | None = None
) -> np.ndarray:
    """``D^alpha y`` at every interior grid point (inexact near the bottom of a truncated grid)."""
    grid = y.grid
    orbit = _grid_orbit(grid)
    n = ceil_order(alpha)
    boundary = taylor_boundary(rl_boundary_coeffs(alpha, initial), grid.left_end, grid.ctx)
    base = _from_values(y.values, orbit, boundary)
    inner = _integrate(_safe(base, grid), n - alpha, orbit, boundary)
    return _differentiate(_safe(inner, grid), n, orbit)(grid.size)


def _safe(sampler: Sampler, grid: QGrid) -> Sampler:
    # past the end of a truncated a = 0 grid there is nothing to read: pad with zeros
    if grid.left_end > 0.0:
        return sampler

    def values(count: int) -> np.ndarray:
        have = min(count, grid.size)
        out = np.zeros(count)
        out[:have] = sampler(have)
        return out

    return values


def inner_derivatives_grid(y: GridFunction, inner_order: float, derivs: Sequence[int]) -> np.ndarray:
    """Rows ``D_q^k I^inner_order y`` at every interior grid point, one per ``k`` in ``derivs``.

    ``y`` is taken to vanish at and below the left end.
    """
    grid = y.grid
    orbit = _grid_orbit(grid)
    inner = _safe(_integrate(_safe(_from_values(y.values, orbit, None), grid), inner_order, orbit), grid)
    return np.array([_differentiate(inner, k, orbit)(grid.size) for k in derivs]).reshape(len(derivs), grid.size)


def taylor_derivative(coeffs: Sequence[float], a: float, k: int, xs: np.ndarray, ctx: QContext) -> np.ndarray:
    """``D_q^k`` of ``sum_j coeffs[j] (x - a)_q^j / [j]_q!``, which shifts the coefficients by ``k``."""
    poly = taylor_boundary(list(coeffs)[k:], a, ctx)
    if poly is None:
        return np.zeros(len(xs))
    return poly(np.asarray(xs, dtype=float))
