import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcauchy.errors import QDomainError
from qcauchy.qcore import FractionalOrder, QContext, q_factorial, q_gamma, q_power
from qcauchy.qfractional import (
    caputo_derivative,
    hilfer_derivative,
    hilfer_derivative_grid,
    hilfer_initial_term,
    kernel_weights,
    norm_bound,
    rl_derivative,
    rl_derivative_grid,
    rl_integral,
    rl_integral_grid,
)
from qcauchy.qfunction import GridFunction, QGrid, lq_norm, q_derivative, q_derivative_n
from qcauchy.reference import brute_force_semigroup

C5 = QContext(0.5)
C9 = QContext(0.9)


def poly(c):
    return lambda t: float(np.polyval(c, t))


def orbit_points(a, q, count):
    if a == 0.0:
        return [q**j for j in range(count)]
    return [a * q ** -(j + 1) for j in range(count)]


class TestIntegral:
    def test_examples(self):
        assert rl_integral(lambda t: 1.0, 1.0, 0.0, 1.0, C5) == pytest.approx(1.0, rel=1e-13)
        assert rl_integral(lambda t: 1.0, 0.5, 0.0, 1.0, C5) == pytest.approx(1 / q_gamma(1.5, C5), rel=1e-13)

    def test_rejects(self):
        with pytest.raises(QDomainError):
            rl_integral(lambda t: 1.0, 0.0, 0.0, 1.0, C5)
        with pytest.raises(QDomainError):
            rl_integral(lambda t: 1.0, 0.5, 1.0, 0.5, C5)

    @pytest.mark.parametrize("ctx", [C5, C9])
    @pytest.mark.parametrize("a", [0.0, 0.5])
    @pytest.mark.parametrize("lam", [-0.5, 0.0, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.5])
    def test_power_image(self, ctx, a, lam, alpha):
        scale = q_gamma(lam + 1, ctx) / q_gamma(alpha + lam + 1, ctx)
        for x in orbit_points(a, ctx.q, 4):
            got = rl_integral(lambda t: q_power(t, a, lam, ctx), alpha, a, x, ctx)
            assert got == pytest.approx(scale * q_power(x, a, alpha + lam, ctx), rel=1e-9)

    @pytest.mark.parametrize("a,ctx", [(0.5, C5), (0.25, C9), (0.0, C5)])
    @pytest.mark.parametrize("alpha,beta", [(0.3, 0.7), (1.2, 0.5), (0.0, 0.8)])
    def test_semigroup_against_nested_sums(self, a, ctx, alpha, beta):
        f = poly([0.4, -1.0, 0.5, 2.0])
        x = orbit_points(a, ctx.q, 3)[-1]
        nested, fused = brute_force_semigroup(f, alpha, beta, a, x, ctx)
        assert nested == pytest.approx(fused, rel=1e-8)
        assert rl_integral(f, alpha + beta, a, x, ctx) == pytest.approx(fused, rel=1e-10)

    def test_brute_oracle_constant(self):
        nested, fused = brute_force_semigroup(lambda t: 1.0, 0.4, 0.9, 0.0, 1.0, C5)
        want = q_power(1.0, 0.0, 1.3, C5) / q_gamma(2.3, C5)
        assert nested == pytest.approx(want, rel=1e-10) and fused == pytest.approx(want, rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        c=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
        alpha=st.floats(0.05, 2.0),
        beta=st.floats(0.05, 2.0),
    )
    def test_semigroup_on_grid(self, c, alpha, beta):
        g = QGrid.over(0.25, 0.25 * 0.5**-8, C5)
        f = GridFunction.sample(poly(c), g)
        nested = rl_integral_grid(rl_integral_grid(f, beta), alpha).values
        fused = rl_integral_grid(f, alpha + beta).values
        np.testing.assert_allclose(nested, fused, rtol=1e-8, atol=1e-12)

    def test_grid_matches_pointwise(self):
        g = QGrid.over(0.5, 0.5 * 0.9**-6, C9)
        f = poly([1.0, 0.0, -2.0])
        got = rl_integral_grid(GridFunction.sample(f, g), 0.6).values
        want = [rl_integral(f, 0.6, 0.5, float(x), C9) for x in g.interior]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_kernel_weights_sum(self):
        # I^nu f(x) = x^nu sum_m c_m f(x q^m), so for f = 1 the weights sum to 1 / Gamma_q(nu + 1)
        w = kernel_weights(0.7, 200, C5)
        assert np.sum(w) == pytest.approx(1 / q_gamma(1.7, C5), rel=1e-12)


class TestNormBound:
    def test_examples(self):
        assert norm_bound(1.0, 0.0, 3.0, C5) == pytest.approx(3.0)
        assert norm_bound(2.0, 0.0, 1.0, C5) == pytest.approx(1 / q_gamma(3.0, C5))
        assert norm_bound(0.5, 0.5, 1.0, C5) == pytest.approx(q_power(1.0, 0.25, 0.5, C5) / q_gamma(1.5, C5))

    @settings(max_examples=30, deadline=None)
    @given(c=st.lists(st.floats(-1, 1), min_size=1, max_size=5), alpha=st.sampled_from([0.3, 0.7, 1.5]))
    def test_bound_holds(self, c, alpha):
        a, b = 0.5, 0.5 * 0.5**-5
        f = poly(c)
        lhs = lq_norm(lambda x: rl_integral(f, alpha, a, x, C5), a, b, C5)
        rhs = norm_bound(alpha, a, b, C5) * lq_norm(f, a, b, C5)
        assert lhs <= rhs * (1 + 1e-8) + 1e-300


class TestDerivatives:
    @pytest.mark.parametrize("a", [0.0, 0.5])
    @pytest.mark.parametrize("alpha", [0.4, 1.0, 1.7, 2.5])
    def test_rl_annihilates(self, a, alpha):
        n = FractionalOrder(alpha).n
        for k in range(1, n + 1):
            f = lambda t, k=k: q_power(t, a, alpha - k, C5)  # noqa: E731
            # the only nonzero limit is D^(alpha-k) f = Gamma_q(alpha - k + 1)
            initial = [0.0] * n
            initial[k - 1] = q_gamma(alpha - k + 1, C5)
            for x in orbit_points(a, 0.5, 3):
                assert abs(rl_derivative(f, alpha, a, x, C5, initial)) < 1e-8 * max(1.0, abs(f(x)))

    @pytest.mark.parametrize("a,ctx", [(0.0, C5), (0.5, C5), (0.5, C9)])
    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.5])
    def test_left_inverse(self, a, ctx, alpha):
        g = poly([1.0, -0.5, 0.25])
        x = orbit_points(a, ctx.q, 2)[-1]
        got = rl_derivative(lambda s: rl_integral(g, alpha, a, s, ctx), alpha, a, x, ctx)
        assert got == pytest.approx(g(x), rel=1e-8)

    @pytest.mark.parametrize("alpha,beta", [(1.5, 0.4), (0.9, 0.3), (2.2, 1.0)])
    def test_partial_left_inverse(self, alpha, beta):
        g = poly([2.0, 1.0, 0.0, -1.0])
        a, x = 0.5, 0.5 * 0.5**-3
        got = rl_derivative(lambda s: rl_integral(g, alpha, a, s, C5), beta, a, x, C5)
        assert got == pytest.approx(rl_integral(g, alpha - beta, a, x, C5), rel=1e-8)

    @pytest.mark.parametrize("a", [0.0, 0.5])
    def test_integer_order(self, a):
        f = poly([1.0, 2.0, -1.0, 0.5])
        for x in orbit_points(a, 0.5, 3):
            assert rl_derivative(f, 1.0, a, x, C5) == pytest.approx(q_derivative(f, x, C5), rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.3, 0.75])
    @pytest.mark.parametrize("a", [0.0, 0.5])
    def test_expansion_with_boundary_terms(self, alpha, a):
        # D^alpha f = sum_k D_q^k f(a) (x - a)_q^(k - alpha) / Gamma_q(k - alpha + 1) + I^(n - alpha) D_q^n f
        f = poly([0.5, -1.0, 2.0, 1.0])
        n = FractionalOrder(alpha).n
        dk = [q_derivative_n(f, a, k, C5) if a > 0 else np.polyval(np.polyder([0.5, -1.0, 2.0, 1.0], k), 0) * q_factorial(k, C5) for k in range(n)]
        for x in orbit_points(a, 0.5, 3):
            series = sum(dk[k] * q_power(x, a, k - alpha, C5) / q_gamma(k - alpha + 1, C5) for k in range(n))
            tail = rl_integral(lambda t: q_derivative_n(f, t, n, C5), n - alpha, a, x, C5)
            assert rl_derivative(f, alpha, a, x, C5) == pytest.approx(series + tail, rel=1e-8)

    def test_caputo_examples(self):
        assert abs(caputo_derivative(lambda t: 4.0, 0.5, 0.0, 1.0, C5)) < 1e-14
        got = caputo_derivative(lambda t: q_power(t, 0.5, 1, C5), 0.5, 0.5, 2.0, C5)
        assert got == pytest.approx(q_power(2.0, 0.5, 0.5, C5) / q_gamma(1.5, C5), rel=1e-10)
        f = poly([1.0, -2.0, 3.0])
        assert caputo_derivative(f, 1.0, 0.0, 0.5, C5) == pytest.approx(q_derivative(f, 0.5, C5), rel=1e-12)
        with pytest.raises(QDomainError):
            caputo_derivative(f, 1.5, 0.0, 0.5, C5)

    @pytest.mark.parametrize("a", [0.0, 0.5])
    @pytest.mark.parametrize("ctx", [C5, C9])
    def test_hilfer_degeneracies(self, a, ctx):
        f = poly([0.5, 1.0, 1.0])
        for x in orbit_points(a, ctx.q, 3):
            for alpha in (0.3, 0.7, 1.5):
                h = hilfer_derivative(f, FractionalOrder(alpha, 0.0), a, x, ctx)
                assert h == pytest.approx(rl_derivative(f, alpha, a, x, ctx), rel=1e-9)
            for alpha in (0.3, 0.7):
                h = hilfer_derivative(f, FractionalOrder(alpha, 1.0), a, x, ctx)
                assert h == pytest.approx(caputo_derivative(f, alpha, a, x, ctx), rel=1e-9)

    @pytest.mark.parametrize(
        "alpha,beta,a",
        [
            (0.3, 0.5, 0.5), (0.7, 0.0, 0.5), (1.4, 0.25, 0.5), (2.5, 0.8, 0.5),
            # at a = 0 only n = 1: for n >= 2 the cut orbit's error is amplified by x^-n
            (0.3, 0.5, 0.0), (0.7, 0.0, 0.0), (0.6, 1.0, 0.0),
        ],
    )
    def test_hilfer_annihilation(self, alpha, beta, a):
        order = FractionalOrder(alpha, beta)
        for k in range(order.n):
            f = lambda t, k=k: q_power(t, a, k - order.gamma, C5)  # noqa: E731
            # the only nonzero limit is D_q^k I^gamma f = Gamma_q(k - gamma + 1)
            initial = [0.0] * order.n
            initial[k] = q_gamma(k - order.gamma + 1, C5)
            for x in orbit_points(a, 0.5, 3):
                assert abs(hilfer_derivative(f, order, a, x, C5, initial)) < 1e-8

    @pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
    @pytest.mark.parametrize("alpha", [0.3, 0.7])
    @pytest.mark.parametrize("a", [0.0, 0.5])
    def test_composition(self, alpha, beta, a):
        order = FractionalOrder(alpha, beta)
        for mu in (order.gamma + 0.5, 1.0, 2.0):
            y = lambda t: q_power(t, a, mu, C5)  # noqa: E731
            x = orbit_points(a, 0.5, 2)[-1]
            got = rl_integral(lambda s: hilfer_derivative(y, order, a, s, C5), alpha, a, x, C5)
            assert got == pytest.approx(y(x), rel=1e-8)

    def test_grid_derivatives_match_pointwise(self):
        g = QGrid.over(0.5, 0.5 * 0.5**-6, C5)
        f = poly([1.0, 0.5, -1.0, 2.0])
        y = GridFunction.sample(f, g)
        order = FractionalOrder(1.3, 0.4)
        np.testing.assert_allclose(
            hilfer_derivative_grid(y, order),
            [hilfer_derivative(f, order, 0.5, float(x), C5) for x in g.interior],
            rtol=1e-10,
        )
        np.testing.assert_allclose(
            rl_derivative_grid(y, 0.6),
            [rl_derivative(f, 0.6, 0.5, float(x), C5) for x in g.interior],
            rtol=1e-10,
        )


class TestInitialTerm:
    def test_examples(self):
        o = FractionalOrder(0.5, 1.0)
        assert hilfer_initial_term(FractionalOrder(1.5, 0.2), 0.0, [0.0, 0.0], 0.7, C5) == 0.0
        assert hilfer_initial_term(o, 0.0, [3.0], 0.7, C5) == pytest.approx(3.0, rel=1e-15)
        o = FractionalOrder(0.5, 0.0)
        want = q_power(0.7, 0.0, -0.5, C5) / q_gamma(0.5, C5)
        assert hilfer_initial_term(o, 0.0, [1.0], 0.7, C5) == pytest.approx(want, rel=1e-14)

    def test_wrong_length(self):
        with pytest.raises(QDomainError):
            hilfer_initial_term(FractionalOrder(1.5), 0.0, [1.0], 0.7, C5)
