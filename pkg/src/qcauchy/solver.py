"""Cauchy-type q-fractional problems solved through their Volterra form.

A problem ``D y = f(x, y)`` with Riemann-Liouville or Hilfer ``D`` is
equivalent to ``y = y0 + I^alpha f(., y)``, where ``y0`` carries the initial
data. On the q-orbit grid the right-hand side at ``x`` only involves grid
points at or below ``x``, so the interval is cut into segments with
contraction constant below ``omega_max`` and Picard iteration is run segment
by segment from the left end up, earlier segments entering as known history.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from qcauchy.errors import NonConvergenceError, NonFiniteError, PartitionError, QDomainError
from qcauchy.qcore import FractionalOrder, QContext, q_gamma, q_power
from qcauchy.qfractional import (
    hilfer_derivative_grid,
    hilfer_initial_term,
    inner_derivatives_grid,
    kernel_weights,
    rl_boundary_coeffs,
    rl_derivative_grid,
    rl_initial_term,
    taylor_derivative,
)
from qcauchy.qfunction import GridFunction, QGrid, RealFunction1, orbit_steps

log = logging.getLogger(__name__)

RealFunction2 = Callable[[float, float], float]

CONTRACTION_NORMS = ("l1", "sup")


class ProblemKind(Enum):
    RL = "rl"
    HILFER = "hilfer"


@dataclass(frozen=True)
class CauchyProblem:
    """A Cauchy-type problem on ``(a, b]``.

    For ``kind=HILFER``, ``initial[k]`` is the limit of ``D_q^k I^gamma y`` at
    ``a``. For ``kind=RL``, ``initial[i]`` is the limit of
    ``D^(alpha-1-i) y``. ``grid_depth`` only matters when ``a == 0``; for
    ``a > 0`` the grid is the q-orbit of ``a``.

    ``known_solution`` and ``solve_from`` let a caller pin ``y`` on the grid
    points up to ``solve_from`` and solve only above it.
    """

    kind: ProblemKind
    order: FractionalOrder
    a: float
    b: float
    initial: tuple[float, ...]
    rhs: RealFunction2
    lipschitz: float
    ctx: QContext
    solve_tol: float = 1e-10
    max_picard_iters: int = 200
    grid_depth: int | None = None
    omega_max: float = 0.9
    contraction_norm: str = "l1"
    known_solution: RealFunction1 | None = field(default=None, compare=False)
    solve_from: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial", tuple(float(v) for v in self.initial))
        if not 0.0 <= self.a < self.b:
            raise QDomainError(f"need 0 <= a < b, got a={self.a}, b={self.b}")
        if len(self.initial) != self.order.n:
            raise QDomainError(
                f"alpha={self.order.alpha} needs {self.order.n} initial values, got {len(self.initial)}"
            )
        if self.kind is ProblemKind.RL and self.order.beta != 0.0:
            raise QDomainError("a Riemann-Liouville problem has beta = 0")
        if not self.lipschitz > 0.0:
            raise QDomainError(f"Lipschitz constant must be positive, got {self.lipschitz}")
        if not self.solve_tol > 0.0:
            raise QDomainError(f"solve_tol must be positive, got {self.solve_tol}")
        if self.max_picard_iters < 1:
            raise QDomainError("max_picard_iters must be >= 1")
        if not 0.0 < self.omega_max < 1.0:
            raise QDomainError(f"omega_max must lie in (0, 1), got {self.omega_max}")
        if self.grid_depth is not None and self.grid_depth < 1:
            raise QDomainError("grid_depth must be >= 1")
        if self.contraction_norm not in CONTRACTION_NORMS:
            raise QDomainError(
                f"contraction_norm must be one of {CONTRACTION_NORMS}, got {self.contraction_norm!r}"
            )
        if (self.known_solution is None) != (self.solve_from is None):
            raise QDomainError("known_solution and solve_from go together")

    @property
    def alpha(self) -> float:
        return self.order.alpha

    def grid(self) -> QGrid:
        if self.a == 0.0 and self.grid_depth is not None:
            return QGrid(self.b, self.ctx, self.grid_depth, 0.0)
        return QGrid.over(self.a, self.b, self.ctx)

    def initial_term(self, x: float) -> float:
        if self.kind is ProblemKind.HILFER:
            return hilfer_initial_term(self.order, self.a, self.initial, x, self.ctx)
        return rl_initial_term(self.alpha, self.a, self.initial, x, self.ctx)

    def operator(self, y: GridFunction) -> np.ndarray:
        """The defining fractional derivative of ``y`` at every grid point."""
        if self.kind is ProblemKind.HILFER:
            return hilfer_derivative_grid(y, self.order, self.initial)
        return rl_derivative_grid(y, self.alpha, self.initial)

    def replace(self, **changes) -> CauchyProblem:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Segment:
    left: float
    right: float
    omega: float


@dataclass(frozen=True)
class Solution:
    grid: QGrid
    y: GridFunction
    iterations_per_segment: tuple[int, ...]
    segments: tuple[Segment, ...]
    residual_sup: float
    residuals: np.ndarray
    initial_condition_errors: tuple[float, ...]
    change_history: tuple[tuple[float, ...], ...] = ()
    l1_change_history: tuple[tuple[float, ...], ...] = ()

    @property
    def y_values(self) -> np.ndarray:
        return self.y.values

    @property
    def points(self) -> np.ndarray:
        return self.grid.interior


def contraction_constant(
    C: float, alpha: float, a: float, xi: float, ctx: QContext, norm: str = "l1"
) -> float:
    """Lipschitz-scaled norm of ``I^alpha`` on the segment ``[a, xi]``.

    ``norm="l1"`` gives ``C (xi - q a)_q^alpha / Gamma_q(alpha + 1)``, the
    integral-norm bound. ``norm="sup"`` gives ``C (xi - a)_q^alpha /
    Gamma_q(alpha + 1)``: with ``a`` and ``xi`` on one q-orbit and the values
    at and below ``a`` held fixed, this is the exact sup-norm Lipschitz
    constant of the discrete segment map, since ``I^alpha 1`` from ``a``
    equals ``(x - a)_q^alpha / Gamma_q(alpha + 1)`` and increases in ``x``.
    """
    if not a < xi:
        raise QDomainError(f"need a < xi, got a={a}, xi={xi}")
    if norm == "l1":
        base = ctx.q * a
    elif norm == "sup":
        base = a
    else:
        raise QDomainError(f"unknown norm {norm!r}; expected one of {CONTRACTION_NORMS}")
    return C * q_power(xi, base, alpha, ctx) / q_gamma(alpha + 1.0, ctx)


def _start_index(problem: CauchyProblem, grid: QGrid) -> int:
    """Number of grid points that are solved for (the top ones)."""
    if problem.solve_from is None:
        return grid.size
    pts = grid.interior
    above = np.nonzero(pts > problem.solve_from * (1.0 + 1e-12))[0]
    return len(above)


def partition_interval(problem: CauchyProblem) -> list[Segment]:
    """Greedy split of the solved range into segments with ``omega <= omega_max``.

    Each right end is the largest grid point keeping the segment's
    contraction constant within bound; segments are returned left to right.
    """
    grid = problem.grid()
    pts = grid.interior
    n_solve = _start_index(problem, grid)
    if n_solve == 0:
        return []
    left = problem.a if n_solve == grid.size else float(pts[n_solve])
    lo = n_solve  # grid index just below the current segment
    segments: list[Segment] = []
    while lo > 0:
        best = None
        for j in range(lo - 1, -1, -1):
            w = contraction_constant(
                problem.lipschitz, problem.alpha, left, float(pts[j]), problem.ctx, problem.contraction_norm
            )
            if w <= problem.omega_max:
                best = (j, w)
            else:
                break
        if best is None:
            w = contraction_constant(
                problem.lipschitz, problem.alpha, left, float(pts[lo - 1]), problem.ctx, problem.contraction_norm
            )
            raise PartitionError(
                f"segment [{left:.6g}, {pts[lo - 1]:.6g}] already has omega={w:.4g} > "
                f"omega_max={problem.omega_max}; Lipschitz constant {problem.lipschitz:g} is too large"
            )
        j, w = best
        segments.append(Segment(left, float(pts[j]), w))
        left = float(pts[j])
        lo = j
    return segments


def _evaluate_rhs(problem: CauchyProblem, pts: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.array([problem.rhs(float(x), float(v)) for x, v in zip(pts, y)], dtype=float)
    if not np.all(np.isfinite(out)):
        bad = int(np.nonzero(~np.isfinite(out))[0][0])
        raise NonFiniteError(f"rhs is not finite at x={pts[bad]!r}, y={y[bad]!r}")
    return out


def _integral_rows(f: np.ndarray, pts: np.ndarray, alpha: float, ctx: QContext, rows: slice) -> np.ndarray:
    # (I^alpha F)(x_j) for j in rows, the sum running over all later grid points
    start = rows.start
    c = kernel_weights(alpha, len(f) - start, ctx)
    tail = f[start:]
    conv = np.convolve(tail[::-1], c)[: len(tail)][::-1]
    return pts[rows] ** alpha * conv[: rows.stop - start]


def volterra_rhs(problem: CauchyProblem, y: GridFunction, x: float) -> float:
    """``y0(x) + I^alpha f(., y)(x)`` with ``y`` read off the grid."""
    grid = y.grid
    j = grid.index_of(x)
    if j >= grid.size:
        raise QDomainError(f"x={x} is the left end; the Volterra form is evaluated on (a, b]")
    pts = grid.interior
    f = _evaluate_rhs(problem, pts[j:], y.values[j:])
    integral = _integral_rows(f, pts[j:], problem.alpha, problem.ctx, slice(0, 1))[0]
    return problem.initial_term(x) + float(integral)


def volterra_operator(problem: CauchyProblem, y: GridFunction) -> np.ndarray:
    """The Volterra right-hand side at every grid point."""
    grid = y.grid
    pts = grid.interior
    f = _evaluate_rhs(problem, pts, y.values)
    y0 = np.array([problem.initial_term(float(x)) for x in pts])
    return y0 + _integral_rows(f, pts, problem.alpha, problem.ctx, slice(0, len(pts)))


def _l1_weights(grid: QGrid) -> np.ndarray:
    # Jackson quadrature weights (1 - q) x_j on the interior points
    return (1.0 - grid.q) * grid.interior


def picard_solve(problem: CauchyProblem) -> Solution:
    """Successive approximations on each contraction segment.

    A segment is done once both the sup-norm change of ``y`` and that of
    ``f(., y)`` fall below ``solve_tol``; the returned iterate then misses the
    Volterra form and the differential form by less than ``solve_tol`` each.
    """
    grid = problem.grid()
    pts = grid.interior
    size = grid.size
    ctx = problem.ctx
    segments = partition_interval(problem)
    n_solve = _start_index(problem, grid)

    y0 = np.array([problem.initial_term(float(x)) for x in pts])
    y = np.zeros(size)
    if problem.known_solution is not None:
        for j in range(n_solve, size):
            y[j] = problem.known_solution(float(pts[j]))
    # the integral part y - y0, kept apart to avoid cancellation against a singular y0
    z = y - y0
    f_vals = np.zeros(size)
    if n_solve < size:
        f_vals[n_solve:] = _evaluate_rhs(problem, pts[n_solve:], y[n_solve:])

    weights = _l1_weights(grid)
    iterations: list[int] = []
    history: list[tuple[float, ...]] = []
    l1_history: list[tuple[float, ...]] = []
    lo = n_solve
    for seg in segments:
        hi = grid.index_of(seg.right)
        rows = slice(hi, lo)
        # start from y0 plus the fixed contribution of everything below the segment
        f_vals[rows] = 0.0
        cur_int = _integral_rows(f_vals, pts, problem.alpha, ctx, rows)
        current = y0[rows] + cur_int
        changes: list[float] = []
        l1_changes: list[float] = []
        converged = False
        f_prev = f_vals[rows].copy()
        for it in range(1, problem.max_picard_iters + 1):
            f_vals[rows] = _evaluate_rhs(problem, pts[rows], current)
            # D I^alpha is the identity on the grid, so the residual of the
            # current iterate is exactly the change in f
            f_change = float(np.max(np.abs(f_vals[rows] - f_prev)))
            f_prev = f_vals[rows].copy()
            new_int = _integral_rows(f_vals, pts, problem.alpha, ctx, rows)
            new = y0[rows] + new_int
            diff = np.abs(new - current)
            change = float(diff.max())
            changes.append(change)
            l1_changes.append(float(np.dot(weights[rows], diff)))
            if change < problem.solve_tol and f_change < problem.solve_tol:
                converged = True
                break
            current, cur_int = new, new_int
        y[rows] = current
        z[rows] = cur_int
        f_vals[rows] = _evaluate_rhs(problem, pts[rows], current)
        iterations.append(it)
        history.append(tuple(changes))
        l1_history.append(tuple(l1_changes))
        log.debug("segment [%g, %g] omega=%.3g: %d iterations", seg.left, seg.right, seg.omega, it)
        if not converged:
            raise NonConvergenceError(
                f"Picard iteration on [{seg.left:.6g}, {seg.right:.6g}] still changed by "
                f"{changes[-1]:.3e} after {it} iterations (solve_tol={problem.solve_tol:g})"
            )
        lo = hi

    y_grid = GridFunction(grid, y)
    z_grid = GridFunction(grid, z)
    residuals = residual_report(problem, y_grid, z_grid)
    interior = _residual_mask(problem, grid)
    residual_sup = float(np.max(residuals[interior])) if np.any(interior) else 0.0
    return Solution(
        grid=grid,
        y=y_grid,
        iterations_per_segment=tuple(iterations),
        segments=tuple(segments),
        residual_sup=residual_sup,
        residuals=residuals,
        initial_condition_errors=tuple(initial_condition_errors(problem, y_grid, z_grid)),
        change_history=tuple(history),
        l1_change_history=tuple(l1_history),
    )


def _residual_mask(problem: CauchyProblem, grid: QGrid) -> np.ndarray:
    """Grid points where the residual is meaningful.

    On a truncated ``a = 0`` grid the points whose orbit tail was cut off
    (``q**(depth - j)`` above the square root of the series tolerance) are
    excluded.
    """
    mask = np.ones(grid.size, dtype=bool)
    if grid.left_end == 0.0:
        cut = math.ceil(0.5 * math.log(problem.ctx.series_tol) / math.log(grid.q))
        mask[max(grid.size - cut, 1):] = False
    return mask


def _integral_part(problem: CauchyProblem, y: GridFunction, z: GridFunction | None) -> GridFunction:
    # y = y0 + z with y0 the initial term, which D annihilates
    if z is not None:
        return z
    y0 = np.array([problem.initial_term(float(x)) for x in y.points])
    return GridFunction(y.grid, y.values - y0)


def residual_report(problem: CauchyProblem, y: GridFunction, z: GridFunction | None = None) -> np.ndarray:
    """``|D y - f(x, y)|`` at every grid point, ``D`` the problem's derivative.

    The initial term lies in the null space of ``D``, so ``D`` is applied to
    ``y`` minus that term with zero initial data. This keeps the singular
    powers ``(x - a)_q^(alpha - k)`` out of the truncated sums of an ``a = 0``
    grid. Pass ``z = y - y0`` when it is known without cancellation.
    """
    z = _integral_part(problem, y, z)
    if problem.kind is ProblemKind.HILFER:
        lhs = hilfer_derivative_grid(z, problem.order)
    else:
        lhs = rl_derivative_grid(z, problem.alpha)
    rhs = _evaluate_rhs(problem, y.points, y.values)
    return np.abs(lhs - rhs)


def _limit_setup(problem: CauchyProblem) -> tuple[float, list[int], list[float]]:
    n = problem.order.n
    if problem.kind is ProblemKind.HILFER:
        return problem.order.gamma, list(range(n)), list(problem.initial)
    return n - problem.alpha, [n - 1 - i for i in range(n)], rl_boundary_coeffs(problem.alpha, problem.initial)


def initial_condition_trace(
    problem: CauchyProblem, y: GridFunction, count: int = 5, z: GridFunction | None = None
) -> np.ndarray:
    """The quantities whose limits at ``a`` are the initial data, at the ``count`` lowest usable points.

    Row ``k`` belongs to ``initial[k]``; columns run toward ``a``. The
    initial term contributes a q-Taylor polynomial, added in closed form.
    """
    grid = y.grid
    inner_order, derivs, coeffs = _limit_setup(problem)
    z = _integral_part(problem, y, z)
    rows = inner_derivatives_grid(z, inner_order, derivs)
    usable = int(np.count_nonzero(_residual_mask(problem, grid)))
    cols = np.arange(max(usable - count, 0), usable)
    pts = grid.interior[cols]
    out = rows[:, cols]
    for r, k in enumerate(derivs):
        out[r] += taylor_derivative(coeffs, grid.left_end, k, pts, grid.ctx)
    return out


def initial_condition_errors(
    problem: CauchyProblem, y: GridFunction, z: GridFunction | None = None
) -> list[float]:
    """Mismatch between each initial datum and its limit quantity at the point nearest ``a``.

    Relative when the datum is nonzero, absolute otherwise.
    """
    trace = initial_condition_trace(problem, y, count=1, z=z)
    out = []
    for k, target in enumerate(problem.initial):
        got = float(trace[k, -1])
        err = abs(got - target)
        out.append(err / abs(target) if target != 0.0 else err)
    return out


def estimate_lipschitz(
    rhs: RealFunction2,
    a: float,
    b: float,
    y_low: float,
    y_high: float,
    samples: int = 25,
    ctx: QContext | None = None,
) -> float:
    """Heuristic Lipschitz constant: largest difference quotient in ``y`` over a sample lattice.

    Sampled x values are q-orbit points when ``ctx`` is given, else evenly
    spaced. The result is a lower estimate of the true constant.
    """
    if ctx is not None and a > 0.0 and orbit_steps(b, a, ctx.q) is not None:
        xs = QGrid.over(a, b, ctx).interior[:samples]
    else:
        xs = np.linspace(a, b, samples + 1)[1:]
    ys = np.linspace(y_low, y_high, samples)
    best = 0.0
    for x in xs:
        vals = np.array([rhs(float(x), float(v)) for v in ys])
        quot = np.abs(np.diff(vals)) / np.diff(ys)
        best = max(best, float(np.max(quot)))
    log.warning("Lipschitz constant %.6g estimated by sampling; this is a heuristic", best)
    return best if best > 0.0 else 1e-12

