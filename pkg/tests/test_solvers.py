import math

import numpy as np
import pytest
from conftest import diag_dominant
from hypothesis import given, settings
from hypothesis import strategies as st

from adkrylov.errors import DimensionError, UsageError
from adkrylov.scalar import DualArray
from adkrylov.solvers import (
    SOLVERS,
    IdentityPreconditioner,
    SolverConfig,
    apply_identity_preconditioner,
    bicgstab,
    gmres_restart,
    solve,
    tfqmr,
)
from adkrylov.sparse import CsrMatrix, dense_solve_oracle


class Recorder:
    def __init__(self):
        self.calls = []

    def __call__(self, k, x, residual):
        self.calls.append((k, x, residual))


@pytest.mark.parametrize("solver", SOLVERS)
def test_identity_exact_after_first_iteration(solver):
    b = np.array([1.0, -2.0, 3.5, 0.25])
    rec = Recorder()
    solve(CsrMatrix.identity(4), b, cfg=SolverConfig(solver, max_iterations=5), observer=rec)
    k, x, residual = rec.calls[0]
    assert k == 1
    assert residual <= 1e-14 * np.linalg.norm(b)
    np.testing.assert_allclose(x, b, rtol=0, atol=1e-14)


@pytest.mark.parametrize("solver", SOLVERS)
@pytest.mark.parametrize("scale", [1.0, 3.0, -0.5])
def test_scaled_identity_within_two_iterations(solver, scale):
    n = 6
    A = CsrMatrix(n, n, np.arange(n + 1), np.arange(n), np.full(n, scale))
    b = np.linspace(1.0, 2.0, n)
    rec = Recorder()
    solve(A, b, cfg=SolverConfig(solver, max_iterations=2), observer=rec)
    best = min(np.linalg.norm(x - b / scale) for _, x, _ in rec.calls)
    assert best <= 1e-14 * np.linalg.norm(b / scale)


def test_bicgstab_and_tfqmr_stop_exactly_on_identity():
    b = np.array([1.0, 2.0, 3.0])
    for fn in (bicgstab, tfqmr):
        out = fn(CsrMatrix.identity(3), b)
        assert out.termination == "tolerance_met"
        assert out.iterations == 1
        np.testing.assert_array_equal(out.x, b)


def test_gmres_diagonal_terminates_in_n_steps(rng):
    A = CsrMatrix.from_dense(np.diag([1.0, 2.0, 3.0, 4.0, 5.0]))
    b = rng.uniform(size=5)
    rec = Recorder()
    gmres_restart(A, b, cfg=SolverConfig("gmres", max_iterations=5, restart=5), observer=rec)
    x_ref = dense_solve_oracle(A, b)
    k, x, residual = rec.calls[-1]
    assert k <= 5
    assert residual <= 1e-10 * np.linalg.norm(b)
    np.testing.assert_allclose(x, x_ref, rtol=1e-10)


@pytest.mark.parametrize("solver", ["bicgstab", "tfqmr", "gmres"])
def test_random_diagonally_dominant_matches_oracle(solver, small_system):
    A, dense, b = small_system
    out = solve(A, b, cfg=SolverConfig(solver, max_iterations=2000, tol=1e-8))
    assert out.termination == "tolerance_met"
    assert out.residual <= 1e-8 * np.linalg.norm(b)
    np.testing.assert_allclose(out.x, dense_solve_oracle(dense, b), rtol=0, atol=1e-6)


class TestPreconditioner:
    def test_returns_input(self):
        v = np.array([1.0, 2.0, 3.0])
        assert apply_identity_preconditioner(v) is v
        assert IdentityPreconditioner()(v) is v

    def test_empty(self):
        assert len(IdentityPreconditioner()(np.zeros(0))) == 0

    def test_dual(self):
        d = DualArray([1.0, 2.0], [0.5, 0.25])
        assert IdentityPreconditioner()(d) is d

    @pytest.mark.parametrize("solver", SOLVERS)
    def test_solvers_apply_given_preconditioner(self, solver, small_system):
        A, _, b = small_system
        seen = []

        class Spy(IdentityPreconditioner):
            def __call__(self, v):
                seen.append(v)
                return v

        plain = solve(A, b, cfg=SolverConfig(solver, max_iterations=30))
        spied = solve(A, b, cfg=SolverConfig(solver, max_iterations=30), preconditioner=Spy())
        assert seen
        np.testing.assert_array_equal(plain.x, spied.x)


class TestBreakdowns:
    def test_bicgstab_rho_zero(self):
        # shadow residual is orthogonal to A r0
        A = CsrMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        out = bicgstab(A, np.array([1.0, 0.0]))
        assert out.termination == "breakdown"
        assert out.breakdown_kind == "rho_zero"
        assert out.breakdown_iteration == 1
        assert np.isfinite(out.x).all()

    def test_tfqmr_rho_zero(self):
        A = CsrMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        out = tfqmr(A, np.array([1.0, 0.0]))
        assert out.breakdown_kind == "rho_zero"

    def test_gmres_singular_hessenberg(self):
        A = CsrMatrix.from_dense([[0.0, 0.0], [0.0, 1.0]])
        out = gmres_restart(A, np.array([1.0, 0.0]))
        assert out.breakdown_kind == "h_singular"
        np.testing.assert_array_equal(out.x, [0.0, 0.0])

    @pytest.mark.parametrize("solver", SOLVERS)
    def test_nonfinite_returns_last_finite_iterate(self, solver):
        A = CsrMatrix.from_dense([[math.nan, 0.0], [0.0, 1.0]])
        out = solve(A, np.array([1.0, 1.0]), cfg=SolverConfig(solver))
        assert out.termination == "breakdown"
        assert out.breakdown_kind == "nonfinite_value"
        assert np.isfinite(out.x).all()

    def test_bicgstab_omega_zero(self):
        # t = A s is orthogonal to s for a rotation
        A = CsrMatrix.from_dense([[0.0, -1.0], [1.0, 0.0]])
        out = bicgstab(A, np.array([1.0, 1.0]))
        assert out.termination in ("breakdown", "tolerance_met")
        if out.termination == "breakdown":
            assert out.breakdown_kind in ("omega_zero", "rho_zero")


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(solver="cg"), dict(max_iterations=0), dict(restart=0), dict(record_every=0),
         dict(tol=-1.0)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(UsageError):
            SolverConfig(**kwargs)

    def test_defaults(self):
        cfg = SolverConfig()
        assert (cfg.max_iterations, cfg.restart, cfg.tol, cfg.record_every) == (2000, 10, 0.0, 1)

    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            solve(CsrMatrix.identity(3), np.ones(2))
        with pytest.raises(DimensionError):
            solve(CsrMatrix.from_dense(np.ones((2, 3))), np.ones(2))


@settings(max_examples=30, deadline=None)
@given(
    st.sampled_from(SOLVERS),
    st.integers(1, 7),
    st.integers(1, 60),
    st.integers(0, 2**32 - 1),
)
def test_observer_call_count(solver, record_every, max_iterations, seed):
    rng = np.random.default_rng(seed)
    n = 15
    A = CsrMatrix.from_dense(rng.normal(size=(n, n)) + 2 * np.eye(n))
    b = rng.uniform(size=n)
    rec = Recorder()
    cfg = SolverConfig(solver, max_iterations=max_iterations, record_every=record_every)
    out = solve(A, b, cfg=cfg, observer=rec)
    ks = [k for k, _, _ in rec.calls]
    assert len(ks) == math.ceil(out.iterations / record_every)
    assert ks == sorted(set(ks))
    if out.iterations:
        assert ks[-1] == out.iterations
    assert all(k % record_every == 0 for k in ks[:-1])
    assert out.iterations <= max_iterations


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SOLVERS), st.floats(1e-10, 1e-2), st.integers(0, 2**32 - 1))
def test_tolerance_met_implies_small_residual(solver, tol, seed):
    rng = np.random.default_rng(seed)
    dense = diag_dominant(rng, 12, density=0.5)
    A = CsrMatrix.from_dense(dense)
    b = rng.uniform(size=12)
    out = solve(A, b, cfg=SolverConfig(solver, tol=tol))
    if out.termination == "tolerance_met":
        assert np.linalg.norm(b - dense @ out.x) <= tol * np.linalg.norm(b) * (1 + 1e-12)
        assert out.residual <= tol * np.linalg.norm(b)


@pytest.mark.parametrize("solver", SOLVERS)
def test_zero_tangent_run_is_bit_identical(solver, rng):
    n = 25
    dense = rng.normal(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.3) + 3 * np.eye(n)
    A = CsrMatrix.from_dense(dense)
    b = rng.uniform(size=n)
    cfg = SolverConfig(solver, max_iterations=120)
    plain, dual = Recorder(), Recorder()
    out_p = solve(A, b, cfg=cfg, observer=plain)
    out_d = solve(A.lift(), DualArray(b), cfg=cfg, observer=dual)
    assert len(plain.calls) == len(dual.calls) == out_p.iterations
    for (kp, xp, rp), (kd, xd, rd) in zip(plain.calls, dual.calls):
        assert kp == kd and rp == rd
        assert np.array_equal(xp, xd.value)
        assert not xd.tangent.any()
    assert out_p.summary() == out_d.summary()


def test_zero_rhs_needs_no_iterations():
    out = solve(CsrMatrix.identity(3), np.zeros(3), cfg=SolverConfig("tfqmr"))
    assert out.iterations == 0
    assert out.termination == "tolerance_met"
