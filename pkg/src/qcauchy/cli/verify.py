"""Property suites run by ``qcauchy verify``.

Each check returns the worst deviation it observed and the tolerance it is
held to; a suite passes when every check does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from qcauchy.errors import QCalcError
from qcauchy.qcore import FractionalOrder, QContext, q_gamma, q_number, q_power
from qcauchy.qfractional import (
    hilfer_derivative,
    hilfer_derivative_grid,
    norm_bound,
    rl_derivative_grid,
    rl_integral,
    rl_integral_grid,
)
from qcauchy.qfunction import GridFunction, QGrid, fundamental_theorem_check, lq_norm
from qcauchy.reference import example_5_1, example_5_1_derivative, example_5_2
from qcauchy.solver import picard_solve, volterra_operator

QS = (0.5, 0.9)
LEFT_ENDS = (0.0, 0.5)
ALPHAS = (0.3, 0.7, 1.5)
LAMBDAS = (-0.5, 0.0, 0.5, 1.0, 2.0)
POINTS = 10


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.worst <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = f"error: {self.error}" if self.error else f"worst={self.worst:.3e} tol={self.tol:.1e}"
        return f"{status} {self.name:<28} {detail}"


def rel(got: float, want: float) -> float:
    return abs(got - want) / max(abs(want), 1e-300)


def sample_points(a: float, q: float, count: int = POINTS) -> list[float]:
    """``count`` orbit points: ``q**j`` for ``a = 0``, ``a q**-(j+1)`` otherwise."""
    if a == 0.0:
        return [q**j for j in range(count)]
    return [a * q ** -(j + 1) for j in range(count)]


def polynomials(seed: int, count: int, degree: int = 4) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.uniform(-1.0, 1.0, degree + 1) for _ in range(count)]


def _poly(c: np.ndarray) -> Callable[[float], float]:
    return lambda t: float(np.polyval(c, t))


def check_qgamma_recurrence() -> float:
    worst = 0.0
    for q in (0.3, 0.5, 0.9):
        ctx = QContext(q)
        for x in np.arange(0.25, 5.0001, 0.25):
            nxt = q_gamma(x + 1.0, ctx)
            worst = max(worst, abs(q_gamma(x, ctx) * q_number(x, ctx) - nxt) / abs(nxt))
    return worst


def check_qpower_reciprocal() -> float:
    worst = 0.0
    for q in QS:
        ctx = QContext(q)
        for mu in (0.1, 0.35, 0.8):
            for x in sample_points(0.5, q, 6):
                prod = q_power(x, q ** (1.0 - mu) * 0.5, mu, ctx) * q_power(x, q * 0.5, -mu, ctx)
                worst = max(worst, abs(prod - 1.0))
    return worst


def check_fundamental_theorem() -> float:
    worst = 0.0
    for q in QS:
        ctx = QContext(q)
        for c in polynomials(1, 5):
            lhs, rhs = fundamental_theorem_check(_poly(c), 0.5, 0.5 * q**-6, ctx)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return worst


def check_power_image() -> float:
    worst = 0.0
    for q in QS:
        ctx = QContext(q)
        for a in LEFT_ENDS:
            for alpha in ALPHAS:
                for lam in LAMBDAS:
                    scale = q_gamma(lam + 1.0, ctx) / q_gamma(alpha + lam + 1.0, ctx)
                    for x in sample_points(a, q):
                        got = rl_integral(lambda t: q_power(t, a, lam, ctx), alpha, a, x, ctx)
                        worst = max(worst, rel(got, scale * q_power(x, a, alpha + lam, ctx)))
    return worst


def _grid(a: float, q: float):
    ctx = QContext(q)
    return QGrid.over(a, 1.0 if a == 0.0 else a * q**-12, ctx)


# Nested checks use the whole-grid operators: pointwise nesting costs a
# fresh orbit per inner call. Only the top points are compared, where the
# truncated tail of an a = 0 grid no longer matters.
TOP = 3


def check_semigroup() -> float:
    worst = 0.0
    for q in QS:
        for a in LEFT_ENDS:
            f = GridFunction.sample(_poly(polynomials(2, 1)[0]), _grid(a, q))
            for alpha, beta in ((0.3, 0.7), (0.7, 1.5)):
                nested = rl_integral_grid(rl_integral_grid(f, beta), alpha).values[:TOP]
                fused = rl_integral_grid(f, alpha + beta).values[:TOP]
                worst = max(worst, float(np.max(np.abs(nested - fused) / np.abs(fused))))
    return worst


def check_left_inverse() -> float:
    worst = 0.0
    for q in QS:
        for a in LEFT_ENDS:
            f = GridFunction.sample(_poly(polynomials(3, 1)[0]), _grid(a, q))
            want = f.values[:TOP]
            for alpha in ALPHAS:
                got = rl_derivative_grid(rl_integral_grid(f, alpha), alpha)[:TOP]
                worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want)))))
    return worst


def check_norm_bound() -> float:
    # worst ratio ||I^alpha f|| / (K ||f||) - 1, which must stay below 1e-8
    worst = -math.inf
    ctx = QContext(0.5)
    a, b = 0.5, 0.5 * 0.5**-5
    for alpha, c in zip((0.3, 0.7, 1.5) * 17, polynomials(4, 50)):
        f = _poly(c)
        lhs = lq_norm(lambda x: rl_integral(f, alpha, a, x, ctx), a, b, ctx)
        rhs = norm_bound(alpha, a, b, ctx) * lq_norm(f, a, b, ctx)
        worst = max(worst, lhs / rhs - 1.0)
    return max(worst, 0.0)


def _power_derivative(coeffs, alpha: float, a: float, x: float, ctx: QContext, caputo: bool) -> float:
    # D^alpha of sum c_k (t - a)_q^k term by term; Caputo loses the constant
    total = 0.0
    for k, c in enumerate(coeffs):
        if caputo and k == 0:
            continue
        total += c * q_gamma(k + 1.0, ctx) / q_gamma(k + 1.0 - alpha, ctx) * q_power(x, a, k - alpha, ctx)
    return total


def check_hilfer_degeneracies() -> float:
    """beta = 0 and beta = 1 against the closed forms of the RL and Caputo derivatives."""
    worst = 0.0
    coeffs = (1.0, 0.5, -2.0, 0.75)
    for q in QS:
        ctx = QContext(q)
        for a in LEFT_ENDS:
            f = lambda t: sum(c * q_power(t, a, k, ctx) for k, c in enumerate(coeffs))  # noqa: E731
            for x in sample_points(a, q, 3):
                for alpha in (0.3, 0.7, 1.5):
                    h = hilfer_derivative(f, FractionalOrder(alpha, 0.0), a, x, ctx)
                    worst = max(worst, rel(h, _power_derivative(coeffs, alpha, a, x, ctx, False)))
                for alpha in (0.3, 0.7):
                    h = hilfer_derivative(f, FractionalOrder(alpha, 1.0), a, x, ctx)
                    worst = max(worst, rel(h, _power_derivative(coeffs, alpha, a, x, ctx, True)))
    return worst


def check_composition() -> float:
    """``I^alpha D^(alpha, beta) y = y - y_0`` for powers ``y = (t - a)_q^mu``."""
    worst = 0.0
    for q in QS:
        for a in LEFT_ENDS:
            grid = _grid(a, q)
            ctx = grid.ctx
            for alpha in (0.3, 0.7):
                for beta in (0.0, 0.5, 1.0):
                    order = FractionalOrder(alpha, beta)
                    for mu in (order.gamma + 0.5, 1.0, 2.0):
                        y = GridFunction.sample(lambda t: q_power(t, a, mu, ctx), grid)
                        d = GridFunction(grid, hilfer_derivative_grid(y, order))
                        got = rl_integral_grid(d, alpha).values[:TOP]
                        # the inner integral of y vanishes at a, so y_0 = 0
                        want = y.values[:TOP]
                        worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))
    return worst


EXAMPLE_5_1_RUNS = ((0.5, 0.3, 0.5, 1.0, 0.5, 2.0), (0.9, 0.3, 0.5, 1.0, 0.5, 2.0))
EXAMPLE_5_2_RUNS = ((0.5, 0.7, 0.25, 1.0, 0.5, 2.0), (0.9, 1.4, 0.5, 0.5, 0.5, 0.9))


def _solve(ref) -> tuple[float, float]:
    """Relative error against the closed form, and the used share of the equivalence budget."""
    p = ref.problem
    sol = picard_solve(p)
    keep = sol.points >= p.solve_from * (1.0 - 1e-12)
    exact = ref.exact_on_grid()
    err = float(np.max(np.abs(sol.y_values - exact)[keep] / np.abs(exact[keep])))
    volterra = float(np.max(np.abs(volterra_operator(p, sol.y) - sol.y_values)))
    share = max(sol.residual_sup / (10.0 * p.solve_tol), volterra / (2.0 * p.solve_tol))
    return err, share


def check_example_5_1() -> float:
    worst = 0.0
    ref = example_5_1(0.5, 0.3, 0.5, 1.0, 0.5, 0.25 * 2.0**10)
    p = ref.problem
    for x in p.grid().interior[:POINTS]:
        got = hilfer_derivative(ref.exact_solution, p.order, p.a, float(x), p.ctx)
        worst = max(worst, rel(got, example_5_1_derivative(ref, float(x))))
    for args in EXAMPLE_5_1_RUNS:
        worst = max(worst, _solve(example_5_1(*args))[0])
    return worst


def check_example_5_2() -> float:
    return max(_solve(example_5_2(*args))[0] for args in EXAMPLE_5_2_RUNS)


def check_equivalence() -> float:
    """Share of the budget ``residual <= 10 tol``, ``|V(y) - y| <= 2 tol`` used by the example solves."""
    refs = [example_5_1(*args) for args in EXAMPLE_5_1_RUNS] + [example_5_2(*args) for args in EXAMPLE_5_2_RUNS]
    return max(_solve(ref)[1] for ref in refs)


IDENTITIES: list[tuple[str, Callable[[], float], float]] = [
    ("qgamma-recurrence", check_qgamma_recurrence, 1e-10),
    ("qpower-reciprocal", check_qpower_reciprocal, 1e-10),
    ("fundamental-theorem", check_fundamental_theorem, 1e-10),
    ("power-image", check_power_image, 1e-8),
    ("semigroup", check_semigroup, 1e-8),
    ("left-inverse", check_left_inverse, 1e-8),
    ("norm-bound", check_norm_bound, 1e-8),
    ("hilfer-degeneracies", check_hilfer_degeneracies, 1e-9),
    ("composition", check_composition, 1e-8),
]
EXAMPLES: list[tuple[str, Callable[[], float], float]] = [
    ("example-5.1", check_example_5_1, 1e-6),
    ("example-5.2", check_example_5_2, 1e-6),
    ("equivalence", check_equivalence, 1.0),
]
SUITES = {"identities": IDENTITIES, "examples": EXAMPLES, "all": IDENTITIES + EXAMPLES}


def run_checks(checks: Iterable[tuple[str, Callable[[], float], float]]) -> list[CheckResult]:
    out = []
    for name, fn, tol in checks:
        try:
            out.append(CheckResult(name, fn(), tol))
        except (QCalcError, ArithmeticError, ValueError) as exc:
            out.append(CheckResult(name, math.inf, tol, f"{type(exc).__name__}: {exc}"))
    return out
