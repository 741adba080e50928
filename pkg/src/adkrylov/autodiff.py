"""The two ways of differentiating a linear solve with respect to a parameter u.

Low-level: lift A (with dA/du) and b (with db/du) to dual numbers and run the
solver once; the tangent of the final iterate is the derivative estimate.

High-level: solve A x = b, form ``b_hat = db - dA x`` and solve A y = b_hat
with the same solver, configuration and preconditioner; y is dx/du.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import solvers
from .errors import DimensionError
from .scalar import DualArray
from .solvers import IdentityPreconditioner, SolveOutcome, SolverConfig
from .sparse import CsrMatrix, dense_solve_oracle, spmv

__all__ = [
    "TangentProblem",
    "manufacture_problem",
    "problem_seed",
    "solve_original",
    "solve_lowlevel",
    "solve_highlevel",
    "finite_difference_reference",
    "LowLevelResult",
    "HighLevelResult",
]


@dataclass(frozen=True, eq=False)
class TangentProblem:
    """A manufactured system with known solution and known derivative."""

    A: CsrMatrix
    dA: Optional[CsrMatrix]
    b: np.ndarray
    db: np.ndarray
    x_ref: np.ndarray
    dx_ref: np.ndarray
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        n = self.A.nrows
        if self.A.ncols != n:
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.dA is not None and self.dA.shape != self.A.shape:
            raise DimensionError("dA and A differ in shape")
        for label in ("b", "db", "x_ref", "dx_ref"):
            if np.shape(getattr(self, label)) != (n,):
                raise DimensionError(f"{label} must have length {n}")

    @property
    def n(self):
        return self.A.nrows


def problem_seed(base_seed: int, name: str) -> int:
    """Per-problem seed derived from a base seed and the matrix name.

    Uses SHA-256 rather than ``hash`` so the value does not change between
    interpreter runs.
    """
    digest = hashlib.sha256(f"{int(base_seed)}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def manufacture_problem(A, dA=None, seed=0, *, name="", x_ref=None, dx_ref=None):
    """Draw x_ref and dx_ref uniformly from [0, 1) and build b, db from them.

    ``x_ref``/``dx_ref`` override the random draws (for hand-checked cases).
    Random draws come from numpy's PCG64 generator seeded with ``seed``.
    """
    if A.nrows != A.ncols:
        raise DimensionError(f"A must be square, got {A.shape}")
    rng = np.random.default_rng(seed)
    n = A.nrows
    drawn_x = rng.random(n)
    drawn_dx = rng.random(n)
    x_ref = drawn_x if x_ref is None else np.asarray(x_ref, dtype=float)
    dx_ref = drawn_dx if dx_ref is None else np.asarray(dx_ref, dtype=float)
    A = A.primal_matrix()
    b = spmv(A, x_ref)
    db = spmv(A, dx_ref)
    if dA is not None:
        db = spmv(dA, x_ref) + db
    return TangentProblem(A, dA, b, db, x_ref, dx_ref, seed, name)


class LowLevelResult(NamedTuple):
    x: np.ndarray
    dx: np.ndarray
    outcome: SolveOutcome


class HighLevelResult(NamedTuple):
    x: np.ndarray
    dx: np.ndarray
    outcome_x: SolveOutcome
    outcome_dx: SolveOutcome


def solve_original(p: TangentProblem, cfg: SolverConfig, observer=None,
                   preconditioner=None) -> SolveOutcome:
    """The undifferentiated solve of A x = b."""
    return solvers.solve(p.A, p.b, None, cfg, observer, preconditioner)


def solve_lowlevel(p: TangentProblem, cfg: SolverConfig, observer=None,
                   preconditioner=None) -> LowLevelResult:
    """Run the solver once on dual numbers.

    The observer receives :class:`DualArray` iterates, so both the primal and
    the tangent part are visible at every recorded iteration.
    """
    A = p.A.lift(p.dA)
    b = DualArray(p.b, p.db)
    outcome = solvers.solve(A, b, None, cfg, observer, preconditioner)
    return LowLevelResult(outcome.x.value, outcome.x.tangent, outcome)


def solve_highlevel(p: TangentProblem, cfg: SolverConfig, obs_x=None, obs_dx=None,
                    preconditioner=None) -> HighLevelResult:
    """Solve for x, then for dx/du from the tangent system with the same A."""
    if preconditioner is None:
        preconditioner = IdentityPreconditioner()
    out_x = solvers.solve(p.A, p.b, None, cfg, obs_x, preconditioner)
    x = out_x.x
    b_hat = p.db if p.dA is None else p.db - spmv(p.dA, x)
    out_dx = solvers.solve(p.A, b_hat, None, cfg, obs_dx, preconditioner)
    return HighLevelResult(x, out_dx.x, out_x, out_dx)


def _as_dense(M):
    if isinstance(M, CsrMatrix):
        return M.to_dense()
    return np.asarray(M, dtype=float)


def finite_difference_reference(A_of_u, b_of_u, u0: float, h: float) -> np.ndarray:
    """Central difference (x(u0+h) - x(u0-h)) / 2h using the dense oracle."""
    x_plus = dense_solve_oracle(_as_dense(A_of_u(u0 + h)), np.asarray(b_of_u(u0 + h), dtype=float))
    x_minus = dense_solve_oracle(_as_dense(A_of_u(u0 - h)), np.asarray(b_of_u(u0 - h), dtype=float))
    return (x_plus - x_minus) / (2 * h)
