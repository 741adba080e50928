"""Restarted GMRES, BiCGStab and TFQMR written once for any scalar type.

The same code runs on float64 arrays and on :class:`~adkrylov.scalar.DualArray`
vectors.  Every branch is taken on primal values, so a dual run follows the
exact arithmetic path of the plain run and its tangents are the forward-mode
derivative of that path.

Iteration counting: one GMRES Arnoldi step, one full BiCGStab step (two
products with A), or one TFQMR half-sweep (one product with A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, UsageError
from .scalar import dot, is_finite, norm, primal, sqrt
from .sparse import CsrMatrix, spmv

__all__ = [
    "SOLVERS",
    "SolverConfig",
    "SolveOutcome",
    "IdentityPreconditioner",
    "apply_identity_preconditioner",
    "gmres_restart",
    "bicgstab",
    "tfqmr",
    "solve",
]

SOLVERS = ("gmres", "bicgstab", "tfqmr")

BUDGET_EXHAUSTED = "budget_exhausted"
TOLERANCE_MET = "tolerance_met"
BREAKDOWN = "breakdown"

RHO_ZERO = "rho_zero"
OMEGA_ZERO = "omega_zero"
H_SINGULAR = "h_singular"
NONFINITE = "nonfinite_value"

#: observer(iteration, iterate, primal_residual_norm)
Observer = Callable[[int, object, float], None]


@dataclass(frozen=True)
class SolverConfig:
    solver: str = "bicgstab"
    max_iterations: int = 2000
    restart: int = 10
    tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise UsageError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.max_iterations < 1:
            raise UsageError("max_iterations must be >= 1")
        if self.restart < 1:
            raise UsageError("restart must be >= 1")
        if self.record_every < 1:
            raise UsageError("record_every must be >= 1")
        if not self.tol >= 0:
            raise UsageError("tol must be >= 0")


@dataclass
class SolveOutcome:
    x: object
    iterations: int
    termination: str
    breakdown_kind: Optional[str] = None
    breakdown_iteration: Optional[int] = None
    residual: float = math.nan

    @property
    def converged(self):
        return self.termination == TOLERANCE_MET

    def summary(self):
        if self.termination == BREAKDOWN:
            return f"breakdown:{self.breakdown_kind}@{self.breakdown_iteration}"
        return self.termination


class IdentityPreconditioner:
    """Right preconditioner M = I. Returns its argument unchanged."""

    def __call__(self, v):
        return v


def apply_identity_preconditioner(v):
    return v


class _Monitor:
    """Shared bookkeeping: observer cadence, finiteness, stopping test."""

    def __init__(self, A, b, x0, cfg, observer):
        self.A = A
        self.b = primal(b)
        self.cfg = cfg
        self.observer = observer
        self.k = 0
        self.x = x0
        self.last_finite = x0
        self.threshold = cfg.tol * float(np.linalg.norm(self.b))
        self._A_primal = A.primal_matrix()
        self.residual = self.residual_of(x0)
        self._pending = None
        self.outcome = None

    def residual_of(self, x):
        r = self.b - spmv(self._A_primal, primal(x))
        return float(np.linalg.norm(r))

    @property
    def budget_left(self):
        return self.k < self.cfg.max_iterations

    def initial_check(self):
        """Stop before iterating if x0 already meets the tolerance."""
        if self.residual <= self.threshold:
            self.outcome = self._finish(TOLERANCE_MET)
            return True
        return False

    def step(self, x):
        """Record iterate number k+1. Returns True when the solve must stop."""
        self.k += 1
        self.x = x
        finite = is_finite(x)
        self.residual = self.residual_of(x) if finite else math.nan
        self._pending = (self.k, x, self.residual)
        if self.observer is not None and self.k % self.cfg.record_every == 0:
            self._flush()
        if not finite:
            self.outcome = self._finish(BREAKDOWN, NONFINITE, self.k)
            return True
        self.last_finite = x
        if self.residual <= self.threshold:
            self.outcome = self._finish(TOLERANCE_MET)
            return True
        if self.k >= self.cfg.max_iterations:
            self.outcome = self._finish(BUDGET_EXHAUSTED)
            return True
        return False

    def breakdown(self, kind):
        """Scalar breakdown detected while computing iterate k+1."""
        self.outcome = self._finish(BREAKDOWN, kind, self.k + 1)
        return self.outcome

    def _flush(self):
        if self._pending is not None and self.observer is not None:
            self.observer(*self._pending)
        self._pending = None

    def _finish(self, termination, kind=None, at=None):
        self._flush()
        x = self.last_finite
        residual = self.residual if is_finite(self.x) else self.residual_of(x)
        return SolveOutcome(x, self.k, termination, kind, at, residual)

    def result(self):
        if self.outcome is None:
            self.outcome = self._finish(BUDGET_EXHAUSTED)
        return self.outcome


def _zero(v) -> bool:
    return primal(v) == 0


def _prepare(A, b, x0):
    if not isinstance(A, CsrMatrix):
        raise TypeError("A must be a CsrMatrix")
    if A.nrows != A.ncols:
        raise DimensionError(f"solvers need a square matrix, got {A.shape}")
    if len(b) != A.nrows:
        raise DimensionError(f"b has length {len(b)}, expected {A.nrows}")
    if x0 is None:
        x0 = 0.0 * b
    elif len(x0) != A.nrows:
        raise DimensionError(f"x0 has length {len(x0)}, expected {A.nrows}")
    return x0


def _quiet(fn):
    def wrapper(*args, **kwargs):
        with np.errstate(all="ignore"):
            return fn(*args, **kwargs)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


@_quiet
def gmres_restart(A, b, x0=None, cfg=SolverConfig("gmres"), observer=None,
                  preconditioner=None):
    """GMRES(m) with modified Gram-Schmidt Arnoldi and Givens rotations.

    The observer sees the iterate reconstructed after every Arnoldi step.
    An exactly zero subdiagonal (happy breakdown) ends the cycle early and
    the method restarts from the current iterate.
    """
    M = preconditioner or IdentityPreconditioner()
    x = _prepare(A, b, x0)
    mon = _Monitor(A, b, x, cfg, observer)
    if mon.initial_check():
        return mon.outcome
    m = cfg.restart

    while mon.budget_left:
        r = b - spmv(A, x)
        beta = norm(r)
        if _zero(beta):
            # only reachable when the true residual is exactly zero
            mon.outcome = mon._finish(TOLERANCE_MET)
            return mon.outcome
        V = [r / beta]
        H = []  # H[j] is column j, rotated into upper triangular form
        cs, sn = [], []
        g = [beta]
        x_cycle = x
        for j in range(m):
            z = M(V[j])
            w = spmv(A, z)
            col = []
            for i in range(j + 1):
                h = dot(w, V[i])
                w = w - h * V[i]
                col.append(h)
            h_next = norm(w)
            for i in range(j):
                t = cs[i] * col[i] + sn[i] * col[i + 1]
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1]
                col[i] = t
            denom = _hypot(col[j], h_next)
            if _zero(denom):
                mon.breakdown(H_SINGULAR)
                return mon.outcome
            c, s = col[j] / denom, h_next / denom
            col[j] = denom
            g.append(-s * g[j])
            g[j] = c * g[j]
            cs.append(c)
            sn.append(s)
            H.append(col)

            y = _back_substitute(H, g, j + 1)
            update = y[0] * V[0]
            for i in range(1, j + 1):
                update = update + y[i] * V[i]
            x = x_cycle + M(update)
            if mon.step(x):
                return mon.outcome
            if _zero(h_next):
                break
            V.append(w / h_next)
    return mon.result()


def _hypot(a, b):
    """sqrt(a^2 + b^2) for scalars of any contract type."""
    return sqrt(a * a + b * b)


def _back_substitute(H, g, k):
    """Solve the k x k upper triangular system stored column-wise in H."""
    y = [None] * k
    for i in range(k - 1, -1, -1):
        acc = g[i]
        for l in range(i + 1, k):
            acc = acc - H[l][i] * y[l]
        y[i] = acc / H[i][i]
    return y


@_quiet
def bicgstab(A, b, x0=None, cfg=SolverConfig("bicgstab"), observer=None,
             preconditioner=None):
    """Right-preconditioned BiCGStab (van der Vorst), shadow residual r0."""
    M = preconditioner or IdentityPreconditioner()
    x = _prepare(A, b, x0)
    mon = _Monitor(A, b, x, cfg, observer)
    if mon.initial_check():
        return mon.outcome

    r = b - spmv(A, x)
    r_shadow = r
    rho = alpha = omega = 1.0
    p = v = 0.0 * r

    while True:
        rho_new = dot(r_shadow, r)
        if _zero(rho_new):
            mon.breakdown(RHO_ZERO)
            return mon.outcome
        beta = (rho_new / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        p_hat = M(p)
        v = spmv(A, p_hat)
        sigma = dot(r_shadow, v)
        if _zero(sigma):
            mon.breakdown(RHO_ZERO)
            return mon.outcome
        alpha = rho_new / sigma
        s = r - alpha * v
        if _zero(norm(s)):
            # the half step already solves the system
            x = x + alpha * p_hat
            if not mon.step(x):
                mon.breakdown(OMEGA_ZERO)
            return mon.outcome
        s_hat = M(s)
        t = spmv(A, s_hat)
        tt = dot(t, t)
        if _zero(tt):
            mon.breakdown(OMEGA_ZERO)
            return mon.outcome
        omega = dot(t, s) / tt
        if _zero(omega):
            mon.breakdown(OMEGA_ZERO)
            return mon.outcome
        x = x + alpha * p_hat + omega * s_hat
        r = s - omega * t
        rho = rho_new
        if mon.step(x):
            return mon.outcome


@_quiet
def tfqmr(A, b, x0=None, cfg=SolverConfig("tfqmr"), observer=None,
          preconditioner=None):
    """Freund's transpose-free QMR; each half-sweep is one iteration."""
    M = preconditioner or IdentityPreconditioner()
    x = _prepare(A, b, x0)
    mon = _Monitor(A, b, x, cfg, observer)
    if mon.initial_check():
        return mon.outcome

    r = b - spmv(A, x)
    r_shadow = r
    w = u = r
    z = M(u)
    Au = spmv(A, z)
    v = Au
    d = 0.0 * r
    tau = norm(r)
    theta = eta = 0.0
    rho = dot(r_shadow, r)
    if _zero(rho):
        mon.breakdown(RHO_ZERO)
        return mon.outcome

    while True:
        sigma = dot(r_shadow, v)
        if _zero(sigma):
            mon.breakdown(RHO_ZERO)
            return mon.outcome
        alpha = rho / sigma
        for half in (0, 1):
            if half == 1:
                u = u - alpha * v
                z = M(u)
                Au = spmv(A, z)
            w = w - alpha * Au
            d = z + (theta * theta / alpha) * eta * d
            if _zero(tau):
                # w vanished on the previous half-sweep; rho would be zero next
                mon.breakdown(RHO_ZERO)
                return mon.outcome
            theta = norm(w) / tau
            c = 1.0 / sqrt(1.0 + theta * theta)
            tau = tau * theta * c
            eta = c * c * alpha
            x = x + eta * d
            if mon.step(x):
                return mon.outcome
        rho_new = dot(r_shadow, w)
        if _zero(rho_new):
            mon.breakdown(RHO_ZERO)
            return mon.outcome
        beta = rho_new / rho
        rho = rho_new
        u = w + beta * u
        z = M(u)
        Au_new = spmv(A, z)
        v = Au_new + beta * (Au + beta * v)
        Au = Au_new


_DISPATCH = {"gmres": gmres_restart, "bicgstab": bicgstab, "tfqmr": tfqmr}


def solve(A, b, x0=None, cfg=None, observer=None, preconditioner=None) -> SolveOutcome:
    """Run the solver named by ``cfg.solver``."""
    cfg = cfg or SolverConfig()
    return _DISPATCH[cfg.solver](A, b, x0, cfg, observer, preconditioner)
