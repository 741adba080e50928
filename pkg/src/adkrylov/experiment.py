"""Benchmark grid, per-iteration error traces and data profiles.

A trace follows one (problem, solver, strategy) cell and records, at every
recorded iteration k, the errors ||x_k - x_ref||_2 and ||dx_k - dx_ref||_2.
A data profile counts, for each iteration budget n, how many problems had
their error drop below a threshold at some iteration <= n.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autodiff import TangentProblem, solve_highlevel, solve_lowlevel, solve_original
from .errors import CsvFormatError, UsageError
from .scalar import primal, tangent
from .solvers import SOLVERS, SolverConfig

__all__ = [
    "STRATEGIES",
    "TraceRecord",
    "IterationTrace",
    "DataProfileCurve",
    "run_trace",
    "run_grid",
    "first_solved_iteration",
    "data_profile",
    "TRACE_HEADER",
    "PROFILE_HEADER",
    "write_trace_csv",
    "read_trace_csv",
    "trace_filename",
    "write_profile_csv",
]

STRATEGIES = ("original", "lowlevel", "highlevel")
DEFAULT_BUDGET = 2000
NONFINITE = "nonfinite"

TRACE_HEADER = ("matrix", "solver", "strategy", "iteration", "err_x", "err_dx",
                "residual", "termination")
PROFILE_HEADER = ("solver", "strategy", "iteration", "problems_solved", "total_problems")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    err_x: float
    err_dx: Optional[float]
    residual: float


@dataclass
class IterationTrace:
    matrix_name: str
    solver: str
    strategy: str
    records: list = field(default_factory=list)
    termination: str = ""

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise UsageError(f"unknown strategy {self.strategy!r}")

    def errors(self, which):
        if which == "dx" and self.strategy == "original":
            raise UsageError("the original strategy has no derivative error")
        if which not in ("x", "dx"):
            raise UsageError(f"which must be 'x' or 'dx', got {which!r}")
        attr = "err_x" if which == "x" else "err_dx"
        return [getattr(r, attr) for r in self.records]

    @property
    def iterations(self):
        return [r.iteration for r in self.records]


def _err(v, ref):
    return float(np.linalg.norm(v - ref))


def run_trace(p: TangentProblem, solver: str, strategy: str, cfg: SolverConfig) -> IterationTrace:
    """Run one grid cell and collect its trace. Never raises on breakdown."""
    cfg = SolverConfig(solver, cfg.max_iterations, cfg.restart, cfg.tol, cfg.record_every)
    trace = IterationTrace(p.name, solver, strategy)

    if strategy == "original":
        def observe(k, x, res):
            trace.records.append(TraceRecord(k, _err(x, p.x_ref), None, res))

        out = solve_original(p, cfg, observe)
        trace.termination = out.summary()

    elif strategy == "lowlevel":
        def observe(k, x, res):
            trace.records.append(TraceRecord(
                k, _err(primal(x), p.x_ref), _err(tangent(x), p.dx_ref), res))

        out = solve_lowlevel(p, cfg, observe).outcome
        trace.termination = out.summary()

    else:
        xs, dxs = {}, {}

        def observe_x(k, x, res):
            xs[k] = (_err(x, p.x_ref), res)

        def observe_dx(k, y, res):
            dxs[k] = (_err(y, p.dx_ref), res)

        result = solve_highlevel(p, cfg, observe_x, observe_dx)
        # a solve that stopped early keeps reporting its final iterate
        last_x = (_err(result.x, p.x_ref), result.outcome_x.residual)
        last_dx = (_err(result.dx, p.dx_ref), result.outcome_dx.residual)
        cur_x = xs[min(xs)] if xs else last_x
        cur_dx = dxs[min(dxs)] if dxs else last_dx
        for k in sorted(set(xs) | set(dxs)):
            cur_x = xs.get(k, cur_x)
            cur_dx = dxs.get(k, cur_dx)
            trace.records.append(TraceRecord(k, cur_x[0], cur_dx[0], cur_dx[1]))
        trace.termination = f"{result.outcome_x.summary()}|{result.outcome_dx.summary()}"
    return trace


def _run_cell(args):
    return run_trace(*args)


def run_grid(problems: Sequence[TangentProblem], solvers=SOLVERS, strategies=STRATEGIES,
             cfg: SolverConfig = SolverConfig(), jobs: int = 1):
    """One trace per (problem, solver, strategy), sorted by matrix, solver, strategy."""
    for s in solvers:
        if s not in SOLVERS:
            raise UsageError(f"unknown solver {s!r}")
    for s in strategies:
        if s not in STRATEGIES:
            raise UsageError(f"unknown strategy {s!r}")
    cells = [(p, s, st, cfg) for p in problems for s in solvers for st in strategies]
    cells.sort(key=lambda c: (c[0].name, c[1], c[2]))
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def first_solved_iteration(t: IterationTrace, which: str, tau: float) -> Optional[int]:
    """First recorded iteration whose error is below ``tau``; None if never.

    Non-finite errors never count as solved.
    """
    if not tau > 0:
        raise UsageError("tau must be positive")
    for k, e in zip(t.iterations, t.errors(which)):
        if e is not None and math.isfinite(e) and e < tau:
            return k
    return None


def _which_for(trace, which):
    if which == "auto":
        return "x" if trace.strategy == "original" else "dx"
    return which


@dataclass
class DataProfileCurve:
    solver: Optional[str]
    strategy: Optional[str]
    threshold: float
    budgets: np.ndarray
    solved: np.ndarray
    total_problems: int

    @property
    def points(self):
        return list(zip(self.budgets.tolist(), self.solved.tolist()))


def data_profile(traces: Sequence[IterationTrace], which: str, tau: float, budgets=None,
                 ) -> DataProfileCurve:
    """Problems solved versus iteration budget for one (solver, strategy).

    ``which`` is ``"x"``, ``"dx"`` or ``"auto"`` (x for the original solver,
    dx for both differentiation strategies, as in the usual figures).
    """
    if budgets is None:
        budgets = np.arange(1, DEFAULT_BUDGET + 1)
    budgets = np.asarray(budgets, dtype=np.int64)
    if len(budgets) > 1 and (np.diff(budgets) <= 0).any():
        raise UsageError("budgets must be increasing")
    keys = {(t.solver, t.strategy) for t in traces}
    if len(keys) > 1:
        raise UsageError(f"traces mix solver/strategy combinations: {sorted(keys)}")
    solver, strategy = next(iter(keys)) if keys else (None, None)
    firsts = []
    for t in traces:
        f = first_solved_iteration(t, _which_for(t, which), tau)
        if f is not None:
            firsts.append(f)
    firsts = np.sort(np.asarray(firsts, dtype=np.int64))
    solved = np.searchsorted(firsts, budgets, side="right")
    return DataProfileCurve(solver, strategy, float(tau), budgets, solved, len(traces))


# CSV -------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else NONFINITE


def _parse_float(s, lineno):
    if s == NONFINITE:
        return math.nan
    try:
        return float(s)
    except ValueError:
        raise CsvFormatError(f"not a number: {s!r}", lineno) from None


def trace_filename(t: IterationTrace) -> str:
    return f"{t.matrix_name}__{t.solver}__{t.strategy}.csv"


def trace_to_csv(t: IterationTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in t.records:
        w.writerow([t.matrix_name, t.solver, t.strategy, r.iteration, _fmt(r.err_x),
                    _fmt(r.err_dx), _fmt(r.residual), t.termination])
    return buf.getvalue()


def write_trace_csv(t: IterationTrace, directory) -> str:
    path = os.path.join(os.fspath(directory), trace_filename(t))
    with open(path, "w", newline="") as fh:
        fh.write(trace_to_csv(t))
    return path


def read_trace_csv(path) -> IterationTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_HEADER:
        raise CsvFormatError("missing or wrong trace header", 1)
    trace = None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(TRACE_HEADER):
            raise CsvFormatError(f"expected {len(TRACE_HEADER)} fields, got {len(row)}", lineno)
        matrix, solver, strategy, it, ex, edx, res, term = row
        if trace is None:
            try:
                trace = IterationTrace(matrix, solver, strategy, termination=term)
            except UsageError as exc:
                raise CsvFormatError(str(exc), lineno) from None
        try:
            k = int(it)
        except ValueError:
            raise CsvFormatError(f"bad iteration {it!r}", lineno) from None
        trace.records.append(TraceRecord(
            k, _parse_float(ex, lineno),
            None if edx == "" else _parse_float(edx, lineno),
            _parse_float(res, lineno)))
    if trace is None:
        name = os.path.basename(os.fspath(path)).removesuffix(".csv").split("__")
        if len(name) != 3:
            raise CsvFormatError("trace file has no rows and no parsable name", 1)
        trace = IterationTrace(*name)
    return trace


def profile_to_csv(curves: Sequence[DataProfileCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for c in curves:
        for n, s in zip(c.budgets.tolist(), c.solved.tolist()):
            w.writerow([c.solver, c.strategy, n, s, c.total_problems])
    return buf.getvalue()


def write_profile_csv(curves: Sequence[DataProfileCurve], path) -> str:
    with open(path, "w", newline="") as fh:
        fh.write(profile_to_csv(curves))
    return os.fspath(path)
