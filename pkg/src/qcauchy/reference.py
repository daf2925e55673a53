"""Closed-form test problems and brute-force oracles.

Two Cauchy problems with known solutions, both posed with the left end at
``q a``:

* ``example-5.1``: Hilfer problem of order ``0 < alpha <= 1`` with a
  quadratic right-hand side and a solution that blows up like
  ``(x - q a)_q^(-alpha - gamma)`` at the left end.
* ``example-5.2``: Hilfer problem with a square-root right-hand side, zero
  initial data and a solution vanishing at the left end.

Both right-hand sides vanish at ``y = 0``, so the zero function is a second
fixed point of the Volterra form. The problems built here pin ``y`` to the
exact solution at the lowest grid points and let the solver take over above
them; see :func:`example_5_1` and :func:`example_5_2`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from qcauchy.errors import QDomainError
from qcauchy.qcore import FractionalOrder, QContext, q_gamma, q_power
from qcauchy.qfunction import QGrid, RealFunction1, jackson_integral
from qcauchy.solver import CauchyProblem, ProblemKind

# Smallest exact value admitted on the solved range of example-5.2.
SQRT_FLOOR = 1e-8
# Relative width of the band around the exact solution over which the
# Lipschitz constants of the reference problems are taken.
TUBE_5_1 = 0.5
TUBE_5_2 = 0.2


@dataclass(frozen=True)
class ReferenceProblem:
    name: str
    problem: CauchyProblem
    exact_solution: RealFunction1
    params: dict
    validity: Callable[..., bool]

    @property
    def solve_from(self) -> float:
        """Lowest grid point the solver is not asked to find (``a'``)."""
        return float(self.problem.solve_from)

    def exact_on_grid(self) -> np.ndarray:
        pts = self.problem.grid().interior
        return np.array([self.exact_solution(float(x)) for x in pts])


def _check(name: str, ok: bool, why: str) -> None:
    if not ok:
        raise QDomainError(f"{name}: {why}")


def example_5_1_valid(q: float, alpha: float, beta: float, lam: float, a: float, b: float) -> bool:
    if not (0.0 < q < 1.0 and 0.0 < alpha <= 1.0 and 0.0 <= beta <= 1.0 and lam > 0.0 and 0.0 < a < b):
        return False
    gamma = (1.0 - alpha) * (1.0 - beta)
    return 1.0 - 2.0 * alpha - gamma > 0.0


def example_5_2_valid(q: float, alpha: float, beta: float, lam: float, a: float, b: float) -> bool:
    return 0.0 < q < 1.0 and alpha > 0.0 and 0.0 <= beta <= 1.0 and lam > 0.0 and 0.0 < a < b


def example_5_1(
    q: float,
    alpha: float,
    beta: float,
    lam: float,
    a: float,
    b: float,
    *,
    ctx: QContext | None = None,
    solve_tol: float = 1e-12,
    max_picard_iters: int = 200,
    tube: float = TUBE_5_1,
) -> ReferenceProblem:
    """Quadratic right-hand side, ``y(x) = Gamma_q(1-alpha-gamma)/Gamma_q(1-2alpha-gamma) (x - qa)_q^(-alpha-gamma) / lam``.

    The lowest grid point is pinned: there the discrete equation reads
    ``y = d y**2`` whose roots are ``0`` and the exact value, and the
    nonzero root repels successive approximations. The Lipschitz constant is
    taken over the band ``|y - exact| <= tube * exact`` on the solved points;
    :func:`example_5_1_box_lipschitz` gives the coarser box constant.
    """
    args = (q, alpha, beta, lam, a, b)
    _check("example-5.1", example_5_1_valid(*args), f"parameters {args} violate 0<alpha<=1, 2 alpha + gamma < 1, 0<a<b")
    ctx = ctx or QContext(q)
    order = FractionalOrder(alpha, beta)
    gamma = order.gamma
    left = q * a
    mu = alpha + gamma
    c_top = q ** (1.0 - mu) * a
    c_bot = q ** (1.0 - 2.0 * alpha - gamma) * a
    scale = q_gamma(1.0 - mu, ctx) / q_gamma(1.0 - 2.0 * alpha - gamma, ctx) / lam

    def exact(x: float) -> float:
        return scale * q_power(x, left, -mu, ctx)

    def rhs(x: float, y: float) -> float:
        return lam * q_power(x, c_top, mu, ctx) / q_power(x, c_bot, alpha, ctx) * y * y

    pts = QGrid.over(left, b, ctx).interior
    solved = pts[:-1]
    # |f_y| = 2 lam k(x) |y| on the band |y - exact| <= tube * exact
    lipschitz = max(
        abs(rhs(float(x), 1.0)) * 2.0 * (1.0 + tube) * exact(float(x)) for x in solved
    ) if len(solved) else 1.0
    problem = CauchyProblem(
        kind=ProblemKind.HILFER,
        order=order,
        a=left,
        b=b,
        initial=(0.0,),
        rhs=rhs,
        lipschitz=lipschitz,
        ctx=ctx,
        solve_tol=solve_tol,
        max_picard_iters=max_picard_iters,
        contraction_norm="sup",
        known_solution=exact,
        solve_from=float(pts[-1]),
    )
    params = dict(q=q, alpha=alpha, beta=beta, lam=lam, a=a, b=b)
    return ReferenceProblem("example-5.1", problem, exact, params, example_5_1_valid)


def example_5_1_box_lipschitz(ref: ReferenceProblem, m_box: float) -> float:
    """Lipschitz constant of the example-5.1 right-hand side over ``[a, b] x {|y| < m_box}``."""
    p = ref.params
    ctx = ref.problem.ctx
    q, alpha, lam, a, b = p["q"], p["alpha"], p["lam"], p["a"], p["b"]
    gamma = ref.problem.order.gamma
    mu = alpha + gamma
    top = q_power(b, q ** (1.0 - mu) * a, mu, ctx)
    bottom = q_power(a, q ** (1.0 - 2.0 * alpha - gamma) * a, alpha, ctx)
    return lam * top / bottom * 2.0 * m_box


def example_5_1_derivative(ref: ReferenceProblem, x: float) -> float:
    """Closed form of the Hilfer derivative of the example-5.1 solution."""
    p = ref.params
    ctx = ref.problem.ctx
    gamma = ref.problem.order.gamma
    alpha, lam = p["alpha"], p["lam"]
    ratio = q_gamma(1.0 - alpha - gamma, ctx) / q_gamma(1.0 - 2.0 * alpha - gamma, ctx)
    return ratio**2 / lam * q_power(x, ref.problem.a, -2.0 * alpha - gamma, ctx)


def example_5_2(
    q: float,
    alpha: float,
    beta: float,
    lam: float,
    a: float,
    b: float,
    *,
    ctx: QContext | None = None,
    solve_tol: float = 1e-12,
    max_picard_iters: int = 200,
    tube: float = TUBE_5_2,
) -> ReferenceProblem:
    """Square-root right-hand side, ``y(x) = [lam Gamma_q(alpha+2beta+1)/Gamma_q(2alpha+2beta+1)]^2 (x - qa)_q^(2alpha+2beta)``.

    ``sqrt`` is not Lipschitz at 0, so ``y`` is pinned on grid points up to
    ``a'``, the smallest one where the exact solution exceeds
    :data:`SQRT_FLOOR`. The Lipschitz constant is taken over the band
    ``y >= (1 - tube) * exact`` on the solved points;
    :func:`example_5_2_box_lipschitz` gives the constant over ``y > M1``.
    """
    args = (q, alpha, beta, lam, a, b)
    _check("example-5.2", example_5_2_valid(*args), f"parameters {args} violate alpha, lam > 0, 0<=beta<=1, 0<a<b")
    ctx = ctx or QContext(q)
    order = FractionalOrder(alpha, beta)
    left = q * a
    expo = 2.0 * alpha + 2.0 * beta
    c_bot = q ** (alpha + 2.0 * beta + 1.0) * a
    scale = (lam * q_gamma(alpha + 2.0 * beta + 1.0, ctx) / q_gamma(expo + 1.0, ctx)) ** 2

    def exact(x: float) -> float:
        return scale * q_power(x, left, expo, ctx)

    def weight(x: float) -> float:
        return math.sqrt(q_power(x, left, expo, ctx)) / q_power(x, c_bot, alpha, ctx)

    def rhs(x: float, y: float) -> float:
        if y < 0.0:
            raise QDomainError(f"example-5.2 right-hand side needs y >= 0, got y={y} at x={x}")
        return lam * weight(x) * math.sqrt(y)

    pts = QGrid.over(left, b, ctx).interior
    above = [float(x) for x in pts if exact(float(x)) > SQRT_FLOOR]
    _check("example-5.2", len(above) >= 2, f"fewer than two grid points with y > {SQRT_FLOOR}")
    a_prime = above[-1]
    # |f_y| = lam w(x) / (2 sqrt(y)) on the band y >= (1 - tube) * exact
    lipschitz = max(
        lam * weight(x) / (2.0 * math.sqrt((1.0 - tube) * exact(x))) for x in above[:-1]
    )
    problem = CauchyProblem(
        kind=ProblemKind.HILFER,
        order=order,
        a=left,
        b=b,
        initial=(0.0,) * order.n,
        rhs=rhs,
        lipschitz=lipschitz,
        ctx=ctx,
        solve_tol=solve_tol,
        max_picard_iters=max_picard_iters,
        contraction_norm="sup",
        known_solution=exact,
        solve_from=a_prime,
    )
    params = dict(q=q, alpha=alpha, beta=beta, lam=lam, a=a, b=b)
    return ReferenceProblem("example-5.2", problem, exact, params, example_5_2_valid)


def example_5_2_box_lipschitz(ref: ReferenceProblem, m1: float) -> float:
    """Lipschitz constant of the example-5.2 right-hand side over ``[a, b] x {y > m1}``."""
    p = ref.params
    ctx = ref.problem.ctx
    q, alpha, beta, lam, a, b = p["q"], p["alpha"], p["beta"], p["lam"], p["a"], p["b"]
    top = math.sqrt(q_power(b, q * a, 2.0 * alpha + 2.0 * beta, ctx))
    bottom = q_power(a, q ** (alpha + 2.0 * beta + 1.0) * a, alpha, ctx)
    return lam * top / bottom / (2.0 * math.sqrt(m1))


BUILDERS = {"example-5.1": example_5_1, "example-5.2": example_5_2}


def by_name(name: str) -> Callable[..., ReferenceProblem]:
    try:
        return BUILDERS[name]
    except KeyError:
        raise QDomainError(f"unknown reference problem {name!r}; known: {sorted(BUILDERS)}") from None


def _brute_rl(f: RealFunction1, alpha: float, a: float, x: float, ctx: QContext) -> float:
    # literal Jackson sum with the kernel evaluated pointwise
    if alpha == 0.0:
        return f(x)
    q = ctx.q
    g = q_gamma(alpha, ctx)
    return jackson_integral(lambda t: q_power(x, q * t, alpha - 1.0, ctx) * f(t), a, x, ctx) / g


def brute_force_semigroup(
    f: RealFunction1, alpha: float, beta_ord: float, a: float, x: float, ctx: QContext
) -> tuple[float, float]:
    """``(I^alpha I^beta f (x), I^(alpha+beta) f (x))`` by nested Jackson sums.

    For ``a > 0``, ``x`` must lie on the q-orbit of ``a``.
    """
    if alpha < 0.0 or beta_ord < 0.0:
        raise QDomainError("orders must be non-negative")
    if not x > a:
        raise QDomainError(f"need x > a, got x={x}, a={a}")
    nested = _brute_rl(lambda t: _brute_rl(f, beta_ord, a, t, ctx), alpha, a, x, ctx)
    fused = _brute_rl(f, alpha + beta_ord, a, x, ctx)
    return nested, fused
