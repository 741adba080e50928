"""Sparse Krylov solvers generic over the scalar type.

Running a solver on :class:`Dual` numbers differentiates its arithmetic
("low-level"); :func:`solve_highlevel` instead solves a second linear system
with the same matrix.  The :mod:`adkrylov.experiment` module compares both.
"""

from .autodiff import (
    TangentProblem,
    finite_difference_reference,
    manufacture_problem,
    solve_highlevel,
    solve_lowlevel,
    solve_original,
)
from .scalar import Dual, DualArray
from .solvers import SolveOutcome, SolverConfig, bicgstab, gmres_restart, solve, tfqmr
from .sparse import CsrMatrix, condition_number, dense_solve_oracle, parse_matrix_market, spmv

__version__ = "0.1.0"

__all__ = [
    "CsrMatrix",
    "Dual",
    "DualArray",
    "SolveOutcome",
    "SolverConfig",
    "TangentProblem",
    "bicgstab",
    "condition_number",
    "dense_solve_oracle",
    "finite_difference_reference",
    "gmres_restart",
    "manufacture_problem",
    "parse_matrix_market",
    "solve",
    "solve_highlevel",
    "solve_lowlevel",
    "solve_original",
    "spmv",
    "tfqmr",
]
