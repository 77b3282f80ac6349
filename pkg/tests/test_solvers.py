import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdca.fixed_point import max_step
from cdca.operators import LeastSquaresData, l1_term, least_squares_term
from cdca.problem import DCProblem, SmoothTerm, zero_convex, zero_prox_friendly
from cdca.solvers import (
    FistaMomentum,
    InnerLoopError,
    RunSummary,
    SolverConfig,
    Termination,
    adca_solve,
    cdca_solve,
    lpm_solve,
    pdca_e_solve,
    pdca_solve,
    relative_change,
    tau,
)

from conftest import make_instance


def shifted_square(center):
    c = np.asarray(center, dtype=float)
    return SmoothTerm(lambda x: 0.5 * float((x - c) @ (x - c)), lambda x: x - c, 1.0)


def lasso(m=30, n=10, weight=0.05, seed=0):
    rng = np.random.default_rng(seed)
    data = LeastSquaresData(rng.standard_normal((m, n)), rng.standard_normal(m))
    return DCProblem(least_squares_term(data), l1_term(weight), zero_convex(), n), data


def test_tau_example_and_closed_form():
    lf, lam, delta = 1.0, 0.1, 0.199
    mu = max_step(lam, lf)
    t = tau(lam, mu, delta)
    # at the largest mu, (1 - mu lam)/mu = L_f/2, so tau = L_f^2 delta^2 / (8 lam)
    assert t == pytest.approx(lf**2 * delta**2 / (8 * lam), rel=1e-14)
    assert t == pytest.approx(0.04950125, rel=1e-12)
    assert t < lam / 2


@given(st.floats(1e-3, 10.0), st.floats(1e-2, 1e3), st.floats(0.01, 0.9999))
def test_tau_below_half_lambda_when_delta_admissible(mult, lf, frac):
    lam = mult * lf
    delta = frac * 2 * lam / lf
    assert tau(lam, max_step(lam, lf), delta) < lam / 2


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(lam=1.0, delta=2.5).contractive_parameters(1.0)
    with pytest.raises(ValueError):
        SolverConfig(lam=1.0, delta=0.5, mu=1.0).contractive_parameters(1.0)
    with pytest.raises(ValueError):
        SolverConfig().contractive_parameters(1.0)
    lam, delta, mu = SolverConfig.from_lipschitz(4.0, 0.1, 1.0).contractive_parameters(4.0)
    assert (lam, delta, mu) == pytest.approx((0.4, 0.1, 2 / 4.8))


def test_cdca_trivial_problem_reaches_center():
    b = np.array([1.0, -2.0, 3.0])
    p = DCProblem(shifted_square(b), zero_prox_friendly(), zero_convex(), 3)
    res = cdca_solve(p, np.zeros(3), SolverConfig.from_lipschitz(1.0, 0.5, tol=1e-10))
    assert res.summary.converged
    np.testing.assert_allclose(res.x, b, atol=1e-8)


def test_lpm_scalar_recursion():
    # x+ = argmin (x-2)^2/2 + (x - x_k)^2/2 = (2 + x_k)/2
    p = DCProblem(shifted_square([2.0]), zero_prox_friendly(), zero_convex(), 1)
    cfg = SolverConfig(lam=1.0, max_outer=2, tol=1e-14)
    res = lpm_solve(p, np.zeros(1), cfg)
    xs = [r.objective for r in res.trace.records]
    assert res.summary.outer_iterations == 2
    assert res.x[0] == pytest.approx(1.5, abs=1e-11)
    assert xs == pytest.approx([2.0, 0.5, 0.125], abs=1e-10)


def test_lpm_and_cdca_agree_on_strongly_convex_problem():
    p, _ = lasso()
    lf = p.lipschitz
    x0 = np.zeros(10)
    a = lpm_solve(p, x0, SolverConfig.from_lipschitz(lf, 0.1, tol=1e-12)).x
    b = cdca_solve(p, x0, SolverConfig.from_lipschitz(lf, 0.1, 1e-3, tol=1e-12)).x
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_pdca_is_gradient_descent_without_regularizer():
    p, data = lasso()
    p = DCProblem(p.smooth, zero_prox_friendly(), zero_convex(), 10)
    x0 = np.ones(10)
    res = pdca_solve(p, x0, SolverConfig(max_outer=1, tol=0.0))
    A, b = data.matrix, data.observations
    np.testing.assert_allclose(res.x, x0 - A.T @ (A @ x0 - b) / p.lipschitz, rtol=1e-13)
    assert res.summary.reason is Termination.MAX_OUTER


def test_pdca_one_step_example():
    p = DCProblem(shifted_square([2.0]), zero_prox_friendly(), zero_convex(), 1)
    res = pdca_solve(p, np.array([7.0]), SolverConfig(tol=1e-12))
    assert res.trace.records[1].objective == 0.0
    assert res.summary.outer_iterations == 2  # second step confirms zero change


def test_pdca_descent_monitor_clean():
    _, p = make_instance(30, 80, 5, seed=2)
    res = pdca_solve(p, np.zeros(80), SolverConfig(tol=1e-7, check_invariants=True))
    assert res.trace.violations == []
    f = [r.objective for r in res.trace.records]
    assert all(b <= a + 1e-9 for a, b in zip(f, f[1:]))


def test_pdca_e_without_extrapolation_matches_pdca():
    _, p = make_instance(30, 80, 5, seed=3)
    x0 = np.random.default_rng(0).standard_normal(80)
    cfg = SolverConfig(tol=1e-8, extrapolate=False)
    a, b = pdca_solve(p, x0, cfg), pdca_e_solve(p, x0, cfg)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.summary.outer_iterations == b.summary.outer_iterations


def test_fista_momentum_sequence():
    mom = FistaMomentum()
    betas = []
    for _ in range(3):
        betas.append(mom.beta)
        mom.advance()
    phi = (1 + math.sqrt(5)) / 2
    theta2 = (1 + math.sqrt(1 + 4 * phi**2)) / 2
    assert betas == pytest.approx([0.0, 0.0, (phi - 1) / theta2])
    mom.reset()
    assert mom.beta == 0.0


def test_adca_without_extrapolation_is_prox_step_with_rho():
    _, p = make_instance(20, 50, 4, seed=4)
    x0 = np.random.default_rng(1).standard_normal(50)
    rho = 1.3 * p.lipschitz
    res = adca_solve(p, x0, SolverConfig(max_outer=3, tol=0.0, extrapolate=False), rho=rho)
    x = x0
    for _ in range(3):
        y = rho * x - p.smooth.gradient(x) + p.concave_part.subgradient(x)
        x = p.prox_friendly.prox(y / rho, 1 / rho)
    np.testing.assert_allclose(res.x, x, rtol=1e-12, atol=1e-14)


def test_adca_subproblem_minimizer_on_grid():
    # prox(y/rho, 1/rho) minimizes g(x) + rho/2 x^2 - y x; check against a fine grid
    g = l1_term(0.7)
    rho = 2.5
    grid = np.linspace(-5, 5, 200001)
    for y in (-4.0, -1.0, 0.3, 0.69, 2.2):
        x = g.prox(np.array([y / rho]), 1 / rho)[0]
        vals = 0.7 * np.abs(grid) + rho / 2 * grid**2 - y * grid
        assert abs(x - grid[np.argmin(vals)]) <= 1e-4


def test_adca_rejects_small_rho():
    _, p = make_instance(5, 10, 2)
    with pytest.raises(ValueError):
        adca_solve(p, np.zeros(10), SolverConfig(), rho=p.lipschitz)


@pytest.mark.parametrize("kind", ["l12", "log"])
def test_cdca_energy_descent_and_summability(kind):
    _, p = make_instance(40, 120, 6, seed=5, kind=kind)
    lf = p.lipschitz
    cfg = SolverConfig.from_lipschitz(lf, 0.1, tol=1e-7, check_invariants=True)
    res = cdca_solve(p, np.zeros(120), cfg)
    lam, delta, mu = cfg.contractive_parameters(lf)
    t = res.trace.tau
    recs = res.trace.records
    assert res.trace.violations == []
    for a, b in zip(recs, recs[1:]):
        assert b.aux + (lam / 2 - t) * b.step_norm**2 <= a.aux + 1e-9
    # F >= 0 here, so the squared steps are summable with this bound
    total = sum(r.step_norm**2 for r in recs[1:])
    assert total <= recs[0].aux / (lam / 2 - t) + 1e-9
    assert recs[-1].objective <= recs[0].objective


def test_cdca_residual_bound_on_log_family():
    _, p = make_instance(40, 120, 6, seed=6, kind="log")
    cfg = SolverConfig.from_lipschitz(p.lipschitz, 0.1, tol=1e-7, check_invariants=True)
    res = cdca_solve(p, np.ones(120), cfg)
    assert res.trace.violations == []
    norms = [r.residual_norm for r in res.trace.records[1:]]
    assert all(v is not None for v in norms)
    assert norms[-1] < norms[0]


def test_cdca_stationary_start():
    rng = np.random.default_rng(0)
    data = LeastSquaresData(rng.standard_normal((5, 8)), np.zeros(5))
    from cdca.operators import RegularizerSpec, build_problem

    p = build_problem(data, RegularizerSpec("l12"))
    res = cdca_solve(p, np.zeros(8), SolverConfig.from_lipschitz(p.lipschitz))
    assert res.summary.reason is Termination.STATIONARY
    assert (res.summary.outer_iterations, res.summary.extra_inner_iterations) == (1, 1)
    np.testing.assert_array_equal(res.x, 0.0)


def test_cdca_total_iteration_cap():
    _, p = make_instance(30, 80, 5, seed=7)
    cfg = SolverConfig.from_lipschitz(p.lipschitz, 0.5, tol=1e-14, max_total=50)
    res = cdca_solve(p, np.zeros(80), cfg)
    assert res.summary.reason is Termination.ITERATION_CAP
    assert res.summary.total_iterations <= 50
    assert not res.summary.converged


def test_cdca_inner_loop_error_carries_state():
    _, p = make_instance(30, 80, 5, seed=8)
    cfg = SolverConfig.from_lipschitz(p.lipschitz, 0.001, 1e-4, tol=1e-14, max_inner=2)
    with pytest.raises(InnerLoopError) as err:
        cdca_solve(p, np.zeros(80), cfg)
    assert err.value.best_point.shape == (80,)
    assert err.value.k >= 0


def test_trace_csv(tmp_path):
    _, p = make_instance(20, 40, 3)
    res = cdca_solve(p, np.zeros(40), SolverConfig.from_lipschitz(p.lipschitz))
    path = tmp_path / "t.csv"
    res.trace.write(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["k", "F", "E", "m_k", "rel_change", "elapsed_seconds"]
    assert len(rows) == len(res.trace.records) + 1
    assert sum(int(r[3]) for r in rows[1:]) == res.summary.total_iterations


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_summary_total_is_sum(it, init):
    s = RunSummary(it, init, 0.0, 0.0, Termination.TOLERANCE)
    assert s.total_iterations == it + init
    assert s.as_dict()["titer"] == it + init


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8))
def test_relative_change_zero_iff_equal(vals):
    x = np.array(vals)
    assert relative_change(x, x) == 0.0
    assert relative_change(x + 1.0, x) > 0.0
