"""Exception and warning types shared across the package."""


class QCalcError(Exception):
    """Base class for all errors raised by qcauchy."""


class PoleError(QCalcError, ZeroDivisionError):
    """An infinite product or gamma value hit a pole."""


class QDomainError(QCalcError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonFiniteError(QCalcError, ArithmeticError):
    """A summand or function value came out as inf or nan."""


class PartitionError(QCalcError):
    """No admissible contraction segment exists for the problem."""


class NonConvergenceError(QCalcError):
    """Successive approximations did not settle within the iteration cap."""


class ConvergenceWarning(RuntimeWarning):
    """A series hit its term cap before reaching the requested tolerance."""
