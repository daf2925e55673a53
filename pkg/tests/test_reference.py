import numpy as np
import pytest

from qcauchy.errors import QDomainError
from qcauchy.qcore import QContext, q_gamma, q_power
from qcauchy.qfractional import hilfer_derivative, rl_integral
from qcauchy.qfunction import GridFunction
from qcauchy.reference import (
    SQRT_FLOOR,
    brute_force_semigroup,
    by_name,
    example_5_1,
    example_5_1_box_lipschitz,
    example_5_1_derivative,
    example_5_2,
    example_5_2_box_lipschitz,
)
from qcauchy.solver import picard_solve, residual_report, volterra_operator

E51 = (0.5, 0.3, 0.5, 1.0, 0.5, 2.0)
E52 = (0.5, 0.7, 0.25, 1.0, 0.5, 2.0)


def rel_err(got, want):
    return np.max(np.abs(np.asarray(got) - want) / np.abs(want))


class TestExample51:
    def test_validity(self):
        with pytest.raises(QDomainError):
            example_5_1(0.5, 0.7, 0.0, 1.0, 0.5, 2.0)  # 2 alpha + gamma >= 1
        with pytest.raises(QDomainError):
            example_5_1(0.5, 0.3, 0.5, 1.0, 2.0, 1.0)

    def test_setup(self):
        ref = example_5_1(*E51)
        p = ref.problem
        assert p.a == 0.25 and p.order.gamma == pytest.approx(0.35)
        assert ref.exact_solution(2.0) > 0

    def test_derivative_of_exact_solution(self):
        ref = example_5_1(0.5, 0.3, 0.5, 1.0, 0.5, 0.25 * 2.0**10)
        p = ref.problem
        for x in p.grid().interior[:10]:
            got = hilfer_derivative(ref.exact_solution, p.order, p.a, float(x), p.ctx)
            assert got == pytest.approx(example_5_1_derivative(ref, float(x)), rel=1e-10)

    def test_rhs_on_exact_equals_derivative(self):
        ref = example_5_1(*E51)
        for x in ref.problem.grid().interior:
            x = float(x)
            assert ref.problem.rhs(x, ref.exact_solution(x)) == pytest.approx(example_5_1_derivative(ref, x), rel=1e-12)

    def test_exact_residual(self):
        ref = example_5_1(*E51)
        p = ref.problem
        y = GridFunction(p.grid(), ref.exact_on_grid())
        assert np.max(residual_report(p, y) / np.abs(y.values)) < 1e-6

    @pytest.mark.parametrize("q", [0.5, 0.9])
    def test_volterra_form_without_solver(self, q):
        ref = example_5_1(q, 0.3, 0.5, 1.0, 0.5, 2.0)
        y = GridFunction(ref.problem.grid(), ref.exact_on_grid())
        assert rel_err(volterra_operator(ref.problem, y), y.values) < 1e-7

    def test_box_lipschitz_holds(self):
        ref = example_5_1(*E51)
        p = ref.problem
        m_box = 2.0 * ref.exact_on_grid().max()
        bound = example_5_1_box_lipschitz(ref, m_box)
        rng = np.random.default_rng(7)
        worst = 0.0
        for x in p.grid().interior:
            y1, y2 = rng.uniform(-m_box, m_box, (2, 50))
            f1 = np.array([p.rhs(float(x), v) for v in y1])
            f2 = np.array([p.rhs(float(x), v) for v in y2])
            worst = max(worst, np.max(np.abs(f1 - f2) / np.abs(y1 - y2)))
        assert worst <= bound

    @pytest.mark.parametrize("q", [0.5, 0.9])
    def test_solve(self, q):
        ref = example_5_1(q, 0.3, 0.5, 1.0, 0.5, 2.0)
        sol = picard_solve(ref.problem)
        assert rel_err(sol.y_values, ref.exact_on_grid()) < 1e-5


class TestExample52:
    def test_setup(self):
        ref = example_5_2(*E52)
        p = ref.problem
        assert p.initial == (0.0,)
        assert p.initial_term(2.0) == 0.0
        assert np.all(ref.exact_on_grid() >= 0.0)
        assert ref.exact_solution(ref.solve_from) > SQRT_FLOOR
        scale = (q_gamma(0.7 + 0.5 + 1, p.ctx) / q_gamma(1.4 + 0.5 + 1, p.ctx)) ** 2
        assert ref.exact_solution(2.0) == pytest.approx(scale * q_power(2.0, 0.25, 1.9, p.ctx))

    def test_validity(self):
        with pytest.raises(QDomainError):
            example_5_2(0.5, 0.7, 0.25, -1.0, 0.5, 2.0)
        with pytest.raises(QDomainError):
            example_5_2(0.5, 0.7, 0.25, 1.0, 0.5, 2.0).problem.rhs(1.0, -1.0)

    @pytest.mark.parametrize("args", [E52, (0.9, 1.4, 0.5, 0.5, 0.5, 0.9)])
    def test_volterra_form_without_solver(self, args):
        ref = example_5_2(*args)
        y = GridFunction(ref.problem.grid(), ref.exact_on_grid())
        assert rel_err(volterra_operator(ref.problem, y), y.values) < 1e-7

    def test_box_lipschitz_holds(self):
        ref = example_5_2(*E52)
        p = ref.problem
        m1 = 0.05
        bound = example_5_2_box_lipschitz(ref, m1)
        rng = np.random.default_rng(3)
        worst = 0.0
        for x in p.grid().interior:
            y1, y2 = rng.uniform(m1, 10.0, (2, 50))
            f1 = np.array([p.rhs(float(x), v) for v in y1])
            f2 = np.array([p.rhs(float(x), v) for v in y2])
            worst = max(worst, np.max(np.abs(f1 - f2) / np.abs(y1 - y2)))
        assert worst <= bound

    def test_solve(self):
        ref = example_5_2(*E52)
        sol = picard_solve(ref.problem)
        keep = sol.points >= ref.solve_from
        assert rel_err(sol.y_values[keep], ref.exact_on_grid()[keep]) < 1e-6


class TestOracles:
    def test_by_name(self):
        assert by_name("example-5.2") is example_5_2
        with pytest.raises(QDomainError):
            by_name("example-9")

    def test_semigroup_zero_order(self):
        ctx = QContext(0.5)
        f = lambda t: 1.0 + t * t  # noqa: E731
        nested, fused = brute_force_semigroup(f, 0.6, 0.0, 0.5, 2.0, ctx)
        want = rl_integral(f, 0.6, 0.5, 2.0, ctx)
        assert nested == pytest.approx(want, rel=1e-12) and fused == pytest.approx(want, rel=1e-12)

    def test_semigroup_rejects(self):
        with pytest.raises(QDomainError):
            brute_force_semigroup(lambda t: 1.0, 0.5, 0.5, 1.0, 1.0, QContext(0.5))
