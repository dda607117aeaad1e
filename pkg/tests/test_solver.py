"""Least-squares solver checks: standard test functions and robustness."""

import numpy as np
import pytest

from cityvps.geometry import (
    NonFinite,
    RobustPrefix,
    numeric_jacobian,
    robust_cost,
    solve_least_squares,
)


def test_quadratic_bowl():
    res = solve_least_squares(lambda x: x - 3.0, np.zeros(1))
    assert res.converged
    assert abs(res.params[0] - 3.0) < 1e-8


def test_rosenbrock():
    def residuals(p):
        a, b = p
        return np.array([1.0 - a, 10.0 * (b - a * a)])

    res = solve_least_squares(residuals, np.array([-1.2, 1.0]), max_iterations=200)
    assert res.converged
    assert np.allclose(res.params, [1.0, 1.0], atol=1e-6)


def test_cost_history_non_increasing():
    def residuals(p):
        a, b = p
        return np.array([1.0 - a, 10.0 * (b - a * a), 0.5 * a * b])

    res = solve_least_squares(residuals, np.array([-1.2, 1.0]), max_iterations=200)
    hist = np.array(res.cost_history)
    assert np.all(np.diff(hist) <= 0.0)


def test_huber_outlier_point_fit():
    # Fit a 2D point to samples around (1, 2) with one 1000-sigma outlier;
    # oracle is the coordinate-wise median of the inliers.
    rng = np.random.default_rng(42)
    sigma = 0.1
    inliers = np.array([1.0, 2.0]) + rng.normal(scale=sigma, size=(40, 2))
    samples = np.vstack([inliers, np.array([[1.0 + 1000.0 * sigma, 2.0]])])
    oracle = np.median(inliers, axis=0)

    def residuals(p):
        return (samples - p).ravel()

    robust = RobustPrefix(n_blocks=samples.shape[0], block_size=2, delta=1.0)
    res = solve_least_squares(residuals, np.zeros(2), robust=robust)
    assert res.converged
    assert np.linalg.norm(res.params - oracle) < 3.0 * sigma


def test_robust_cost_matches_huber_closed_form():
    r = np.array([3.0, 4.0, 1.0, 0.5])  # one block of norm 5, two plain rows
    prefix = RobustPrefix(n_blocks=1, block_size=2, delta=1.0)
    expected = 1.0 * (5.0 - 0.5) + 0.5 * (1.0 + 0.25)
    assert robust_cost(r, prefix) == pytest.approx(expected)


def test_non_finite_start_raises():
    with pytest.raises(NonFinite):
        solve_least_squares(lambda x: np.array([np.nan]), np.zeros(1))


def test_analytic_jacobian_usage():
    def residuals(p):
        return np.array([p[0] ** 2 - 2.0, p[0] - p[1]])

    def jacobian(p):
        return np.array([[2.0 * p[0], 0.0], [1.0, -1.0]])

    fd = numeric_jacobian(residuals, np.array([1.3, 0.7]))
    assert np.allclose(jacobian(np.array([1.3, 0.7])), fd, atol=1e-6)
    res = solve_least_squares(residuals, np.array([3.0, 0.0]), jacobian=jacobian)
    assert res.converged
    assert np.allclose(res.params, [np.sqrt(2.0), np.sqrt(2.0)], atol=1e-8)


def test_zero_residual_immediate():
    res = solve_least_squares(lambda x: np.zeros(2), np.array([1.0, 2.0]))
    assert res.converged
    assert res.iterations == 0
