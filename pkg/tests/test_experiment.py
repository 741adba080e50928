import math

import numpy as np
import pytest
from conftest import diag_dominant
from hypothesis import given, settings
from hypothesis import strategies as st

from adkrylov.autodiff import manufacture_problem
from adkrylov.errors import CsvFormatError, UsageError
from adkrylov.experiment import (
    NONFINITE,
    STRATEGIES,
    IterationTrace,
    TraceRecord,
    data_profile,
    first_solved_iteration,
    read_trace_csv,
    run_grid,
    run_trace,
    trace_to_csv,
    write_trace_csv,
)
from adkrylov.solvers import SOLVERS, SolverConfig
from adkrylov.sparse import CsrMatrix


def make_trace(errors, strategy="original", solver="tfqmr", name="m"):
    recs = []
    for k, e in enumerate(errors, start=1):
        if strategy == "original":
            recs.append(TraceRecord(k, e, None, 1.0))
        else:
            recs.append(TraceRecord(k, 1.0, e, 1.0))
    return IterationTrace(name, solver, strategy, recs, "budget_exhausted")


class TestFirstSolved:
    def test_crossing(self):
        assert first_solved_iteration(make_trace([1.0, 0.5, 1e-3]), "x", 1e-2) == 3

    def test_never(self):
        assert first_solved_iteration(make_trace([1.0, 0.5, 1e-2]), "x", 1e-2) is None

    def test_first_crossing_counts(self):
        assert first_solved_iteration(make_trace([1e-3, 0.5, 1e-3]), "x", 1e-2) == 1

    def test_nonfinite_never_solves(self):
        t = make_trace([math.nan, math.inf, 1e-5], strategy="lowlevel")
        assert first_solved_iteration(t, "dx", 1e-2) == 3

    def test_dx_on_original_is_usage_error(self):
        with pytest.raises(UsageError):
            first_solved_iteration(make_trace([1.0]), "dx", 1e-2)

    def test_tau_must_be_positive(self):
        with pytest.raises(UsageError):
            first_solved_iteration(make_trace([1.0]), "x", 0.0)


class TestDataProfile:
    def test_constructed_curve(self):
        big = [1.0] * 10
        traces = [
            make_trace(big[:2] + [1e-3] + big[3:], name="a"),
            make_trace(big[:4] + [1e-3] + big[5:], name="b"),
            make_trace(big, name="c"),
        ]
        curve = data_profile(traces, "x", 1e-2)
        assert len(curve.budgets) == 2000
        solved = dict(curve.points)
        assert (solved[1], solved[2], solved[3], solved[4], solved[5]) == (0, 0, 1, 1, 2)
        assert all(solved[n] == 2 for n in range(5, 2001))
        assert curve.total_problems == 3

    def test_empty(self):
        curve = data_profile([], "x", 1e-2)
        assert curve.total_problems == 0
        assert not curve.solved.any()

    def test_huge_threshold(self):
        traces = [make_trace([5.0, 3.0], name=str(i)) for i in range(4)]
        curve = data_profile(traces, "x", 1e9, budgets=[1, 2, 3])
        assert curve.solved.tolist() == [4, 4, 4]

    def test_mixed_groups_rejected(self):
        with pytest.raises(UsageError):
            data_profile([make_trace([1.0]), make_trace([1.0], solver="gmres")], "x", 1e-2)

    def test_budgets_must_increase(self):
        with pytest.raises(UsageError):
            data_profile([make_trace([1.0])], "x", 1e-2, budgets=[1, 3, 3])

    def test_auto_selects_dx_for_differentiated(self):
        t = IterationTrace("m", "gmres", "highlevel",
                           [TraceRecord(1, 1e-9, 1.0, 1.0), TraceRecord(2, 1e-9, 1e-9, 1.0)])
        assert data_profile([t], "auto", 1e-2, budgets=[1, 2]).solved.tolist() == [0, 1]
        assert data_profile([t], "x", 1e-2, budgets=[1, 2]).solved.tolist() == [1, 1]


error_value = st.one_of(
    st.floats(1e-12, 10.0), st.just(math.nan), st.just(math.inf)
)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(error_value, min_size=1, max_size=30), max_size=8),
       st.integers(1, 3))
def test_profile_structure_and_brute_force_recount(error_lists, stride):
    traces = []
    for i, errs in enumerate(error_lists):
        recs = [TraceRecord(stride * (k + 1), 1.0, e, 1.0) for k, e in enumerate(errs)]
        traces.append(IterationTrace(f"p{i}", "bicgstab", "lowlevel", recs))
    budgets = np.arange(1, 100)
    loose = data_profile(traces, "dx", 1e-2, budgets)
    tight = data_profile(traces, "dx", 1e-4, budgets)
    for curve, tau in ((loose, 1e-2), (tight, 1e-4)):
        assert (np.diff(curve.solved) >= 0).all()
        assert (curve.solved <= curve.total_problems).all()
        for n, count in curve.points:
            brute = sum(
                any(r.iteration <= n and r.err_dx < tau for r in t.records) for t in traces
            )
            assert count == brute
    assert (loose.solved >= tight.solved).all()


def _problem(rng, n=8, name="p"):
    dense = diag_dominant(rng, n)
    dA = CsrMatrix.from_dense(rng.uniform(size=(n, n)))
    return manufacture_problem(CsrMatrix.from_dense(dense), dA, int(rng.integers(1 << 30)),
                               name=name)


class TestGrid:
    def test_cardinality_and_order(self, rng):
        ps = [_problem(rng, name="b"), _problem(rng, name="a")]
        traces = run_grid(ps, ["tfqmr"], STRATEGIES, SolverConfig(max_iterations=20))
        assert len(traces) == 6
        keys = [(t.matrix_name, t.solver, t.strategy) for t in traces]
        assert keys == sorted(keys)

    @pytest.mark.parametrize("solver", SOLVERS)
    def test_identity_error_zero_from_first_iteration(self, solver):
        p = manufacture_problem(CsrMatrix.identity(6), seed=1, name="eye")
        for strategy in STRATEGIES:
            t = run_trace(p, solver, strategy, SolverConfig(max_iterations=5))
            assert t.records[0].iteration == 1
            assert all(r.err_x <= 1e-14 for r in t.records)

    def test_deterministic(self, rng):
        ps = [_problem(rng, name=f"p{i}") for i in range(2)]
        cfg = SolverConfig(max_iterations=40)
        first = [trace_to_csv(t) for t in run_grid(ps, SOLVERS, STRATEGIES, cfg)]
        again = [trace_to_csv(t) for t in run_grid(ps, SOLVERS, STRATEGIES, cfg)]
        assert first == again

    def test_parallel_matches_serial(self, rng):
        ps = [_problem(rng, name=f"p{i}") for i in range(2)]
        cfg = SolverConfig(max_iterations=30)
        serial = [trace_to_csv(t) for t in run_grid(ps, SOLVERS, STRATEGIES, cfg)]
        parallel = [trace_to_csv(t) for t in run_grid(ps, SOLVERS, STRATEGIES, cfg, jobs=2)]
        assert serial == parallel

    @pytest.mark.parametrize("solver", SOLVERS)
    def test_highlevel_err_x_equals_original(self, solver, rng):
        p = _problem(rng, n=15)
        cfg = SolverConfig(max_iterations=60)
        orig = run_trace(p, solver, "original", cfg)
        high = run_trace(p, solver, "highlevel", cfg)
        n = len(orig.records)
        assert [r.err_x for r in high.records[:n]] == [r.err_x for r in orig.records]

    def test_original_has_no_dx(self, rng):
        t = run_trace(_problem(rng), "gmres", "original", SolverConfig(max_iterations=5))
        assert all(r.err_dx is None for r in t.records)
        with pytest.raises(UsageError):
            t.errors("dx")

    def test_breakdown_recorded_not_raised(self):
        A = CsrMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        p = manufacture_problem(A, x_ref=[0.0, 1.0], dx_ref=[1.0, 0.0], name="swap")
        t = run_trace(p, "bicgstab", "original", SolverConfig())
        assert t.termination.startswith("breakdown:rho_zero")

    def test_unknown_names(self, rng):
        with pytest.raises(UsageError):
            run_grid([_problem(rng)], ["cg"], STRATEGIES)
        with pytest.raises(UsageError):
            run_grid([_problem(rng)], SOLVERS, ["adjoint"])


class TestCsv:
    def test_round_trip(self, tmp_path, rng):
        for strategy in STRATEGIES:
            t = run_trace(_problem(rng, name="rt"), "bicgstab", strategy,
                          SolverConfig(max_iterations=25))
            back = read_trace_csv(write_trace_csv(t, tmp_path))
            assert back == t

    def test_nonfinite_marker(self, tmp_path):
        t = IterationTrace("m", "bicgstab", "lowlevel",
                           [TraceRecord(1, 0.5, math.nan, 1.0), TraceRecord(2, 0.25, math.inf, 0.5)])
        text = trace_to_csv(t)
        assert text.count(NONFINITE) == 2
        back = read_trace_csv(write_trace_csv(t, tmp_path))
        assert all(math.isnan(e) for e in back.errors("dx"))

    def test_original_err_dx_empty(self):
        line = trace_to_csv(make_trace([0.5])).splitlines()[1]
        assert line.split(",")[5] == ""

    def test_malformed_reports_line(self, tmp_path):
        good = trace_to_csv(make_trace([0.5, 0.25])).splitlines()
        good[2] = good[2].replace("0.25", "oops")
        path = tmp_path / "bad.csv"
        path.write_text("\n".join(good) + "\n")
        with pytest.raises(CsvFormatError) as exc:
            read_trace_csv(path)
        assert exc.value.lineno == 3
