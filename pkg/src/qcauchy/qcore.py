r"""Scalar q-special functions.

Everything here is a pure function of its arguments and a :class:`QContext`.
The conventions are the standard ones:

.. math::

    [\alpha]_q = \frac{1 - q^\alpha}{1 - q}, \qquad
    (a; q)_n = \prod_{k=0}^{n-1} (1 - a q^k), \qquad
    (a - b)_q^\alpha = a^\alpha \frac{(b/a; q)_\infty}{(q^\alpha b/a; q)_\infty}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from qcauchy.errors import ConvergenceWarning, PoleError, QDomainError

# Used to decide when a real argument "is" an integer.
INT_TOL = 1e-12


@dataclass(frozen=True)
class QContext:
    """Base ``q`` plus the truncation policy for infinite products and series."""

    q: float
    series_tol: float = 1e-14
    max_terms: int = 10000

    def __post_init__(self) -> None:
        if not 0.0 < self.q < 1.0:
            raise QDomainError(f"q must lie in (0, 1), got {self.q!r}")
        if not self.series_tol > 0.0:
            raise QDomainError(f"series_tol must be positive, got {self.series_tol!r}")
        if self.max_terms < 1:
            raise QDomainError(f"max_terms must be >= 1, got {self.max_terms!r}")

    def terms_for(self, scale: float) -> int:
        """Number of factors needed before ``scale * q**k / (1 - q)`` drops below tolerance."""
        scale = abs(scale)
        if scale == 0.0:
            return 1
        bound = self.series_tol * (1.0 - self.q) / scale
        if bound >= 1.0:
            return 1
        k = math.ceil(math.log(bound) / math.log(self.q)) + 1
        if k > self.max_terms:
            warnings.warn(
                f"infinite product needs {k} terms, truncated at max_terms={self.max_terms}",
                ConvergenceWarning,
                stacklevel=3,
            )
            return self.max_terms
        return max(k, 1)


@dataclass(frozen=True)
class FractionalOrder:
    """Order ``alpha`` and Hilfer type ``beta`` of a fractional operator.

    ``n`` is the integer with ``n - 1 < alpha <= n`` and ``gamma`` the
    exponent ``(n - alpha) * (1 - beta)`` of the inner fractional integral.
    """

    alpha: float
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise QDomainError(f"alpha must be positive, got {self.alpha!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise QDomainError(f"beta must lie in [0, 1], got {self.beta!r}")

    @property
    def n(self) -> int:
        return ceil_order(self.alpha)

    @property
    def gamma(self) -> float:
        return (self.n - self.alpha) * (1.0 - self.beta)


def is_integer(x: float) -> bool:
    return abs(x - round(x)) <= INT_TOL * max(1.0, abs(x))


def ceil_order(alpha: float) -> int:
    """The ``n`` with ``n - 1 < alpha <= n``; integer-valued ``alpha`` maps to itself."""
    if is_integer(alpha):
        return int(round(alpha))
    return math.ceil(alpha)


def q_number(alpha: float, ctx: QContext) -> float:
    q = ctx.q
    # expm1 keeps [alpha]_q accurate for tiny alpha
    return -math.expm1(alpha * math.log(q)) / (1.0 - q)


def q_factorial(n: int, ctx: QContext) -> float:
    if n < 0:
        raise QDomainError(f"q_factorial needs n >= 0, got {n}")
    out = 1.0
    for k in range(1, n + 1):
        out *= q_number(k, ctx)
    return out


def q_pochhammer(a: float, n: int, ctx: QContext) -> float:
    """Finite product ``(a; q)_n``; ``(a; q)_0 = 1``."""
    if n < 0:
        raise QDomainError(f"q_pochhammer needs n >= 0, got {n}")
    out = 1.0
    qk = 1.0
    for _ in range(n):
        out *= 1.0 - a * qk
        qk *= ctx.q
    return out


def q_pochhammer_inf(a: float, ctx: QContext) -> float:
    """``(a; q)_inf``, truncated once the remaining factors are within ``series_tol`` of 1."""
    if a == 0.0:
        return 1.0
    k = ctx.terms_for(a)
    factors = 1.0 - a * ctx.q ** np.arange(k)
    return float(np.prod(factors))


def _ratio_product(a: float, shift: float, ctx: QContext) -> float:
    # prod_k (1 - a q^k) / (1 - a q^{k+shift}), factor by factor
    if a == 0.0:
        return 1.0
    k = ctx.terms_for(a * max(1.0, ctx.q ** min(shift, 0.0)))
    powers = ctx.q ** np.arange(k)
    den = 1.0 - a * ctx.q**shift * powers
    if np.any(np.abs(den) < ctx.series_tol):
        raise PoleError(f"(q^{shift} * {a}; q)_inf vanishes")
    num = 1.0 - a * powers
    return float(np.prod(num / den))


def q_pochhammer_real(a: float, alpha: float, ctx: QContext) -> float:
    """``(a; q)_alpha = (a; q)_inf / (q^alpha a; q)_inf`` for real ``alpha``."""
    if alpha == 0.0 or a == 0.0:
        return 1.0
    if alpha > 0 and is_integer(alpha):
        return q_pochhammer(a, int(round(alpha)), ctx)
    return _ratio_product(a, alpha, ctx)


def q_power(a: float, b: float, alpha: float, ctx: QContext) -> float:
    """The q-deformed power ``(a - b)_q^alpha``.

    Non-negative integer exponents use the finite product
    ``prod_{k<alpha} (a - b q^k)`` and accept any real ``a``; other exponents
    need ``a > 0``.
    """
    if alpha == 0.0:
        return 1.0
    if alpha > 0 and is_integer(alpha):
        out = 1.0
        qk = 1.0
        for _ in range(int(round(alpha))):
            out *= a - b * qk
            qk *= ctx.q
        return out
    if a <= 0.0:
        raise QDomainError(f"(a - b)_q^alpha with non-integer alpha={alpha} needs a > 0, got a={a}")
    if b == 0.0:
        return a**alpha
    return a**alpha * _ratio_product(b / a, alpha, ctx)


def q_gamma(x: float, ctx: QContext) -> float:
    r"""The q-gamma function ``(q; q)_inf / (q^x; q)_inf * (1 - q)^(1 - x)``.

    Non-positive non-integer arguments are shifted upward with
    :math:`\Gamma_q(x) = \Gamma_q(x + 1) / [x]_q`.
    """
    if x <= 0.0 and is_integer(x):
        raise PoleError(f"q_gamma has a pole at x={x}")
    if x <= 0.0:
        shifts = math.floor(-x) + 1
        denom = 1.0
        for j in range(shifts):
            denom *= q_number(x + j, ctx)
        return q_gamma(x + shifts, ctx) / denom
    if is_integer(x) and x <= 170:
        return q_factorial(int(round(x)) - 1, ctx)
    q = ctx.q
    return _ratio_product(q, x - 1.0, ctx) * (1.0 - q) ** (1.0 - x)
