"""Fractional q-calculus on Jackson grids and a Picard solver for q-fractional Cauchy problems."""

from qcauchy.errors import (
    NonConvergenceError,
    NonFiniteError,
    PartitionError,
    PoleError,
    QCalcError,
    QDomainError,
)
from qcauchy.qcore import FractionalOrder, QContext, q_gamma, q_number, q_pochhammer, q_power
from qcauchy.solver import CauchyProblem, ProblemKind, Solution, picard_solve

__version__ = "0.1.0"

__all__ = [
    "CauchyProblem",
    "FractionalOrder",
    "NonConvergenceError",
    "NonFiniteError",
    "PartitionError",
    "PoleError",
    "ProblemKind",
    "QCalcError",
    "QContext",
    "QDomainError",
    "Solution",
    "picard_solve",
    "q_gamma",
    "q_number",
    "q_pochhammer",
    "q_power",
]
