import math

import numpy as np
import pytest

from geoadaler.errors import ConfigError, ContractError, NonFiniteError
from geoadaler.objectives import (LogisticSynthetic, Quadratic,
                                  RandomLinearSequence, ReddiSequence,
                                  Rosenbrock, finite_diff_grad, grid_minimizer,
                                  offline_minimizer, reddi_adversarial)
from geoadaler.rng import SplitMix64

from conftest import assert_close


def test_identity_quadratic():
    q = Quadratic(np.eye(2))
    value, grad = q.value_and_grad([1.0, 1.0])
    assert_close(value, 1.0)
    assert_close(grad, [1.0, 1.0])


def test_diagonal_quadratic_hand_values():
    q = Quadratic.diag([1.0, 4.0])
    value, grad = q.value_and_grad([2.0, 1.0])
    assert_close(value, 4.0)
    assert_close(grad, [2.0, 4.0])
    assert_close(q.xstar, [0.0, 0.0])


def test_quadratic_minimizer_residual_verified():
    rng = SplitMix64(17)
    m = rng.normal_array((4, 4))
    q = Quadratic(m @ m.T + 4 * np.eye(4), rng.normal_array(4))
    assert np.linalg.norm(q.grad(q.xstar)) <= 1e-10


def test_quadratic_rejects_bad_matrices():
    with pytest.raises(ContractError):
        Quadratic(np.array([[1.0, 2.0], [0.0, 1.0]]))  # asymmetric
    with pytest.raises(ContractError):
        Quadratic(np.diag([1.0, -2.0]))  # not positive definite


def test_rosenbrock_minimum():
    r = Rosenbrock(2)
    assert_close(r.value([1.0, 1.0]), 0.0)
    assert_close(r.grad([1.0, 1.0]), [0.0, 0.0])


def test_analytic_gradients_match_finite_differences():
    rng = SplitMix64(21)
    objectives = [Quadratic.diag([1.0, 4.0]), Rosenbrock(4), LogisticSynthetic()]
    for obj in objectives:
        for _ in range(100):
            x = rng.normal_array(obj.dim)
            analytic = obj.grad(x)
            numeric = finite_diff_grad(obj.value, x)
            denom = max(1.0, float(np.linalg.norm(analytic)))
            assert np.linalg.norm(analytic - numeric) / denom <= 1e-6


def test_finite_diff_identity_quadratic_tight():
    q = Quadratic(np.eye(2))
    assert_close(finite_diff_grad(q.value, [1.0, 1.0], 1e-6), [1.0, 1.0], tol=1e-8)


def test_finite_diff_rejects_non_finite_with_index():
    def bad(x):
        return float("inf") if x[1] > 0.5 else float(x @ x)

    with pytest.raises(NonFiniteError) as err:
        finite_diff_grad(bad, np.array([0.0, 0.5]), 1e-2)
    assert err.value.index == 1


def test_reddi_piecewise_values():
    assert reddi_adversarial(3.0, 1, 0.5) == (1.5, 3.0)
    assert reddi_adversarial(3.0, 2, 0.5) == (-0.5, -1.0)
    assert reddi_adversarial(3.0, 4, 0.0) == (0.0, 3.0)
    with pytest.raises(ConfigError):
        reddi_adversarial(2.0, 1, 0.0)


def test_reddi_sequence_bounds():
    seq = ReddiSequence(3.0)
    assert seq.grad_bound() == 3.0
    assert seq.dim == 1
    # diameter of [-1, 1] is 2; used as the D constant downstream
    assert float(seq.hi[0] - seq.lo[0]) == 2.0


def test_offline_minimizer_reddi_small_horizons():
    seq = ReddiSequence(3.0)
    assert_close(offline_minimizer(seq, 3), [-1.0])  # slope 3-1-1 = 1 > 0
    assert_close(offline_minimizer(seq, 2), [-1.0])  # slope 3-1 = 2 > 0
    assert_close(offline_minimizer(seq, 300), [-1.0])


def test_offline_minimizer_zero_losses_returns_center():
    seq = RandomLinearSequence(dim=2, horizon=10, seed=1, grad_bound=0.0)
    assert_close(offline_minimizer(seq, 10), [0.0, 0.0])


def test_offline_minimizer_matches_grid_search():
    for seed in (3, 4, 5):
        seq = RandomLinearSequence(dim=1, horizon=40, seed=seed)
        exact = offline_minimizer(seq, 40)
        grid = grid_minimizer(seq, 40, resolution=1e-3)
        assert np.linalg.norm(exact - grid) <= 1e-3 + 1e-12
    seq2 = RandomLinearSequence(dim=2, horizon=25, seed=6)
    exact2 = offline_minimizer(seq2, 25)
    grid2 = grid_minimizer(seq2, 25, resolution=2e-2)
    assert np.linalg.norm(exact2 - grid2) <= 2e-2 * math.sqrt(2) + 1e-12


class _QuadraticOnline:
    """Convex non-linear per-step losses f_t(x) = ||x - a_t||^2 on a box."""

    def __init__(self, anchors, lo, hi):
        self.anchors = np.asarray(anchors, dtype=np.float64)
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.dim = self.lo.size

    def center(self):
        return 0.5 * (self.lo + self.hi)

    def eval(self, t, x):
        d = np.asarray(x, dtype=np.float64) - self.anchors[t - 1]
        return float(d @ d), 2.0 * d


def test_projected_descent_minimizer_for_convex_sequence():
    anchors = [[0.5, -0.25], [0.1, 0.3], [-0.2, 0.1]]
    seq = _QuadraticOnline(anchors, [-1.0, -1.0], [1.0, 1.0])
    x = offline_minimizer(seq, 3)
    assert_close(x, np.mean(anchors, axis=0), tol=1e-8)
    grid = grid_minimizer(seq, 3, resolution=1e-2)
    assert np.linalg.norm(x - grid) <= 1e-2 * math.sqrt(2) + 1e-12


def test_projected_descent_respects_box():
    # mean anchor lies outside the box; minimizer clamps to the edge
    seq = _QuadraticOnline([[2.0], [4.0]], [-1.0], [1.0])
    assert_close(offline_minimizer(seq, 2), [1.0], tol=1e-8)


def test_unbounded_box_rejected():
    seq = ReddiSequence(3.0)
    seq.hi = np.array([np.inf])
    with pytest.raises(ContractError):
        offline_minimizer(seq, 3)


def test_logistic_synthetic_is_deterministic():
    a, b = LogisticSynthetic(seed=9), LogisticSynthetic(seed=9)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)
    assert a.X.shape == (200, 5)
    assert set(np.unique(a.y)) <= {0.0, 1.0}
    # labels stay close to linearly separable: a least-squares plane recovers most
    clean = (a.X @ np.linalg.lstsq(a.X, a.y - 0.5, rcond=None)[0] > 0).astype(float)
    assert 0.0 < np.mean(np.abs(clean - a.y)) < 0.35
