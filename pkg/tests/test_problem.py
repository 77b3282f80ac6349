import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdca.operators import LeastSquaresData, RegularizerSpec, build_problem, l1_term
from cdca.problem import (
    DCProblem,
    ProxFriendlyTerm,
    SmoothTerm,
    criticality_residual,
    evaluate_objective,
    zero_convex,
    zero_prox_friendly,
    zero_smooth,
)


def l12_problem(A, b, gamma=0.01):
    return build_problem(LeastSquaresData(A, b), RegularizerSpec("l12", gamma))


def test_objective_vanishes_at_origin():
    p = l12_problem(np.eye(2), np.zeros(2))
    assert evaluate_objective(p, [0.0, 0.0]) == 0.0


def test_objective_one_sparse_point():
    # |x|_1 == |x|_2 for a 1-sparse x, so the penalty cancels
    p = l12_problem(np.eye(2), np.zeros(2))
    assert evaluate_objective(p, [1.0, 0.0]) == pytest.approx(0.5, abs=1e-15)


def test_objective_logarithmic_scalar():
    p = build_problem(LeastSquaresData([[1.0]], [0.0]), RegularizerSpec("log", 0.01, 0.5))
    # 0.5 * 0.25 + 0.01 * (log 1.0 - log 0.5), evaluated independently
    import mpmath

    mpmath.mp.dps = 30
    expected = float(mpmath.mpf("0.125") + mpmath.mpf("0.01") * (mpmath.log(1) - mpmath.log(mpmath.mpf("0.5"))))
    assert expected == pytest.approx(0.131931, abs=5e-7)
    assert evaluate_objective(p, [0.5]) == pytest.approx(expected, rel=1e-14)


def test_objective_dimension_mismatch():
    p = l12_problem(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        evaluate_objective(p, [1.0, 2.0, 3.0])


def test_objective_infinite_outside_domain():
    indicator = ProxFriendlyTerm(
        value=lambda x: 0.0 if np.all(x >= 0) else math.inf,
        prox=lambda x, a: np.maximum(x, 0.0),
    )
    p = DCProblem(zero_smooth(), indicator, zero_convex(), 2)
    assert evaluate_objective(p, [-1.0, 0.0]) == math.inf
    assert evaluate_objective(p, [1.0, 0.0]) == 0.0


def test_criticality_residual_zero_functions():
    p = DCProblem(zero_smooth(), zero_prox_friendly(), zero_convex(), 3)
    assert criticality_residual(p, np.zeros(3), np.zeros(3), np.zeros(3)) == 0.0


def test_criticality_residual_scalar_l12():
    p = l12_problem([[1.0]], [1.0])
    # grad f(0.99) = -0.01
    assert criticality_residual(p, [0.99], [0.01], [0.01]) == pytest.approx(0.01, abs=1e-15)


def test_criticality_residual_cancels(rng):
    A = rng.standard_normal((4, 6))
    p = l12_problem(A, rng.standard_normal(4))
    x = rng.standard_normal(6)
    eta = rng.standard_normal(6)
    xi = eta - p.smooth.gradient(x)
    assert criticality_residual(p, x, eta, xi) == pytest.approx(0.0, abs=1e-13)


def test_criticality_residual_dimension_mismatch():
    p = l12_problem(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        criticality_residual(p, np.zeros(2), np.zeros(3), np.zeros(2))


def test_smooth_term_rejects_negative_lipschitz():
    with pytest.raises(ValueError):
        SmoothTerm(lambda x: 0.0, np.zeros_like, -1.0)


def test_objective_finite_at_origin_for_shipped_families(rng):
    A = rng.standard_normal((5, 8))
    for kind in ("l12", "log"):
        p = build_problem(LeastSquaresData(A, rng.standard_normal(5)), RegularizerSpec(kind))
        assert math.isfinite(evaluate_objective(p, np.zeros(8)))


@pytest.mark.parametrize("kind", ["l12", "log"])
def test_least_squares_gradient_finite_differences(kind):
    rng = np.random.default_rng(3)
    n = 50
    A = rng.standard_normal((30, n))
    p = build_problem(LeastSquaresData(A, rng.standard_normal(30)), RegularizerSpec(kind))
    h = 1e-6
    for _ in range(20):
        x = rng.standard_normal(n)
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        fd = (p.smooth.value(x + h * d) - p.smooth.value(x - h * d)) / (2 * h)
        an = p.smooth.gradient(x) @ d
        assert abs(fd - an) <= 1e-5 * max(1.0, abs(an))


def test_least_squares_gradient_lipschitz_sampled(rng):
    A = rng.standard_normal((10, 20))
    p = build_problem(LeastSquaresData(A, rng.standard_normal(10)), RegularizerSpec("l12"))
    for _ in range(100):
        x, y = rng.standard_normal(20), rng.standard_normal(20)
        lhs = np.linalg.norm(p.smooth.gradient(x) - p.smooth.gradient(y))
        assert lhs <= p.lipschitz * np.linalg.norm(x - y) * (1 + 1e-10)


@pytest.mark.parametrize("weight", [0.01, 1.0, 3.0])
def test_prox_optimality_subdifferential_inequality(weight):
    # (x - p)/alpha must be a subgradient of g at p = prox(x, alpha)
    rng = np.random.default_rng(7)
    g = l1_term(weight)
    for _ in range(20):
        x = rng.standard_normal(6) * 2
        alpha = rng.uniform(0.05, 2.0)
        p = g.prox(x, alpha)
        xi = (x - p) / alpha
        for _ in range(100):
            z = p + rng.standard_normal(6) * rng.choice([1e-3, 1.0, 10.0])
            assert g.value(z) >= g.value(p) + xi @ (z - p) - 1e-10


@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.floats(0.01, 5.0),
)
def test_prox_firmly_nonexpansive(x, y, alpha):
    g = l1_term(0.7)
    x, y = np.array(x), np.array(y)
    px, py = g.prox(x, alpha), g.prox(y, alpha)
    assert (px - py) @ (x - y) >= np.linalg.norm(px - py) ** 2 - 1e-12
    assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
