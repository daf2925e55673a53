import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcauchy.errors import NonFiniteError, QDomainError
from qcauchy.qcore import QContext, q_gamma, q_number, q_power
from qcauchy.qfunction import (
    GridFunction,
    QGrid,
    fundamental_theorem_check,
    jackson_integral,
    jackson_integral_zero,
    jackson_series,
    lq_norm,
    q_derivative,
    q_derivative_n,
)

C5 = QContext(0.5)
qs = st.sampled_from([0.3, 0.5, 0.9])
coeffs = st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=5)


def poly(c):
    return lambda t: float(np.polyval(c, t))


def naive_sum(f, a, q, terms=3000):
    # plain geometric sampling, no early stop
    return (1 - q) * a * math.fsum(q**m * f(a * q**m) for m in range(terms))


class TestGrid:
    def test_left_end_on_orbit(self):
        g = QGrid.over(0.5, 2.0, C5)
        assert list(g.points) == [2.0, 1.0, 0.5]
        assert list(g.interior) == [2.0, 1.0]
        assert g.index_of(1.0) == 1

    def test_top_point_snaps_down(self):
        g = QGrid.over(0.5, 3.0, C5)
        assert g.points[0] == 2.0

    def test_zero_left_end_reaches_series_tol(self):
        g = QGrid.over(0.0, 1.0, C5)
        assert g.points[-1] < 1e-13
        assert np.all(np.diff(g.points) < 0)

    def test_rejects(self):
        with pytest.raises(QDomainError):
            QGrid.over(1.0, 1.0, C5)
        with pytest.raises(QDomainError):
            QGrid(0.0, C5, 3)
        with pytest.raises(QDomainError):
            QGrid.over(0.5, 2.0, C5).index_of(1.5)

    def test_grid_function(self):
        g = QGrid.over(0.5, 2.0, C5)
        y = GridFunction.sample(lambda t: t * t, g)
        assert y(1.0) == 1.0
        with pytest.raises(QDomainError):
            GridFunction(g, [1.0])
        with pytest.raises(NonFiniteError):
            GridFunction(g, [1.0, math.nan])
        with pytest.raises(ValueError):
            y.values[0] = 3.0


class TestJackson:
    def test_examples_zero(self):
        assert jackson_integral_zero(lambda t: 1.0, 1.0, C5) == pytest.approx(1.0, rel=1e-14)
        assert jackson_integral_zero(lambda t: t, 1.0, C5) == pytest.approx(2 / 3, rel=1e-14)
        assert jackson_integral_zero(lambda t: t * t, 1.0, C5) == pytest.approx(4 / 7, rel=1e-14)

    def test_examples_interval(self):
        assert jackson_integral(lambda t: t, 0.7, 0.7, C5) == 0.0
        assert jackson_integral(lambda t: 1.0, 0.25, 1.0, C5) == pytest.approx(0.75, rel=1e-14)
        assert jackson_integral(lambda t: t, 0.5, 1.0, C5) == pytest.approx(0.5, rel=1e-14)

    def test_off_orbit_interval(self):
        f = lambda t: t**3 + 1  # noqa: E731
        got = jackson_integral(f, 0.3, 1.0, C5)
        assert got == pytest.approx(naive_sum(f, 1.0, 0.5) - naive_sum(f, 0.3, 0.5), rel=1e-13)

    def test_nonfinite_summand(self):
        with pytest.raises(NonFiniteError):
            jackson_integral_zero(lambda t: math.inf, 1.0, C5)

    @given(q=qs, c=coeffs, b=st.floats(0.1, 3.0))
    def test_matches_naive_sum(self, q, c, b):
        ctx = QContext(q)
        assert jackson_integral_zero(poly(c), b, ctx) == pytest.approx(
            naive_sum(poly(c), b, q), rel=1e-12, abs=1e-13
        )

    @given(q=qs, c1=coeffs, c2=coeffs, s=st.floats(-3, 3), t=st.floats(-3, 3))
    def test_linearity(self, q, c1, c2, s, t):
        ctx = QContext(q)
        f, g = poly(c1), poly(c2)
        lhs = jackson_integral(lambda x: s * f(x) + t * g(x), 0.2, 1.7, ctx)
        rhs = s * jackson_integral(f, 0.2, 1.7, ctx) + t * jackson_integral(g, 0.2, 1.7, ctx)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("q", [0.5, 0.9])
    @pytest.mark.parametrize("a", [0.0, 0.25])
    def test_fubini_swap(self, q, a):
        ctx = QContext(q)
        b = 1.0 if a == 0.0 else a * q**-6
        f, g = poly([0.3, -1.0, 2.0]), poly([1.0, 0.0, -0.5, 1.0])
        lhs = jackson_integral(lambda x: f(x) * jackson_integral(g, a, x, ctx), a, b, ctx)
        rhs = jackson_integral(lambda t: g(t) * jackson_integral(f, q * t, b, ctx), a, b, ctx)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    @pytest.mark.parametrize("n", [2, 3])
    def test_iterated_integral_collapses(self, n):
        # n nested integrals equal one integral with kernel (x - qt)_q^(n-1) / Gamma_q(n)
        a, x = 0.25, 0.25 * 0.5**-5
        f = poly([1.0, -2.0, 0.5])
        nested = f
        for _ in range(n):
            nested = (lambda h: lambda s: jackson_integral(h, a, s, C5) if s > a else 0.0)(nested)
        fused = jackson_integral(lambda t: q_power(x, 0.5 * t, n - 1, C5) * f(t), a, x, C5) / q_gamma(n, C5)
        assert nested(x) == pytest.approx(fused, rel=1e-12)

    def test_tail_bounds_truncation_error(self):
        f = lambda t: 1.0 / (1.0 + t)  # noqa: E731
        short = QContext(0.9, series_tol=1e-6)
        value, tail = jackson_series(f, 1.0, short)
        exact, _ = jackson_series(f, 1.0, QContext(0.9, series_tol=1e-15, max_terms=20000))
        assert abs(value - exact) <= tail


class TestDerivatives:
    def test_examples(self):
        assert q_derivative(lambda t: 3.0, 0.7, C5) == 0.0
        assert q_derivative(lambda t: t, 0.7, C5) == pytest.approx(1.0, rel=1e-15)
        assert q_derivative(lambda t: t * t, 1.0, C5) == pytest.approx(1.5, rel=1e-15)
        with pytest.raises(QDomainError):
            q_derivative(lambda t: t, 0.0, C5)

    def test_higher_order(self):
        f = lambda t: math.exp(t)  # noqa: E731
        assert q_derivative_n(f, 0.8, 0, C5) == f(0.8)
        assert q_derivative_n(lambda t: t * t, 0.8, 2, C5) == pytest.approx(1.5, rel=1e-13)
        assert q_derivative_n(lambda t: 2 * t + 1, 0.8, 2, C5) == pytest.approx(0.0, abs=1e-12)

    @given(q=qs, c=coeffs, x=st.floats(0.2, 2.0), n=st.integers(1, 4))
    def test_expansion_matches_recursion(self, q, c, x, n):
        ctx = QContext(q)
        rec = poly(c)
        for _ in range(n):
            rec = (lambda h: lambda t: q_derivative(h, t, ctx))(rec)
        assert q_derivative_n(poly(c), x, n, ctx) == pytest.approx(rec(x), rel=1e-8, abs=1e-8)

    @given(q=qs, b=st.floats(0.0, 1.0), alpha=st.floats(0.1, 3.0), x=st.floats(2.5, 5.0))
    def test_power_rule_right(self, q, b, alpha, x):
        ctx = QContext(q)
        got = q_derivative(lambda t: q_power(t, b, alpha, ctx), x, ctx)
        want = q_number(alpha, ctx) * q_power(x, b, alpha - 1.0, ctx)
        assert got == pytest.approx(want, rel=1e-9)

    @given(q=qs, a=st.floats(2.0, 4.0), alpha=st.floats(0.1, 3.0), x=st.floats(0.1, 1.5))
    def test_power_rule_left(self, q, a, alpha, x):
        ctx = QContext(q)
        got = q_derivative(lambda t: q_power(a, t, alpha, ctx), x, ctx)
        want = -q_number(alpha, ctx) * q_power(a, q * x, alpha - 1.0, ctx)
        assert got == pytest.approx(want, rel=1e-9)


class TestFundamentalTheorem:
    def test_examples(self):
        assert fundamental_theorem_check(lambda t: 2.0, 0.5, 1.0, C5) == (0.0, 0.0)
        lhs, rhs = fundamental_theorem_check(lambda t: t * t, 0.5, 1.0, C5)
        assert lhs == pytest.approx(0.75, rel=1e-14) and rhs == 0.75
        lhs, rhs = fundamental_theorem_check(lambda t: 1 / (1 + t), 0.25, 1.0, C5)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    @given(q=qs, a=st.floats(0.05, 1.0), width=st.floats(0.1, 3.0))
    def test_off_orbit(self, q, a, width):
        f = lambda t: math.sin(t) + t**3  # noqa: E731
        lhs, rhs = fundamental_theorem_check(f, a, a + width, QContext(q))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_norm(self):
        assert lq_norm(lambda t: -1.0, 0.25, 1.0, C5) == pytest.approx(0.75)
        assert lq_norm(lambda t: 2.0, 0.25, 1.0, C5, p=2) == pytest.approx(2 * math.sqrt(0.75))
