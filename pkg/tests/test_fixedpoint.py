import math

import numpy as np
import pytest

from geoadaler.errors import ContractError
from geoadaler.fixedpoint import (OperatorConfig, apply_T, contraction_alpha,
                                  estimate_lipschitz, iterate_to_fixed_point,
                                  normalized_gradient_map, power_iteration,
                                  sample_pairs, verify_cocoercivity)
from geoadaler.objectives import Quadratic
from geoadaler.optimizers import HyperParams, make_optimizer
from geoadaler.rng import SplitMix64

from conftest import assert_close


def test_minimizer_is_fixed_point():
    q = Quadratic(np.eye(2))
    cfg = OperatorConfig(objective=q, gamma=0.5)
    assert_close(apply_T(cfg, q.xstar), q.xstar)


def test_scalar_application_hand_value():
    q = Quadratic(np.eye(1))
    cfg = OperatorConfig(objective=q, gamma=1.0)
    assert_close(apply_T(cfg, [1.0]), [1.0 - 1.0 / math.sqrt(2.0)])


def test_operator_equals_memoryless_optimizer_bitwise():
    q = Quadratic.diag([1.0, 3.0, 0.5])
    gamma = 0.25
    cfg = OperatorConfig(objective=q, gamma=gamma)
    rng = SplitMix64(41)
    h = HyperParams(gamma=gamma, beta=0.0)
    for _ in range(100):
        x = rng.uniform_array(3, -10.0, 10.0)
        opt = make_optimizer("geoadaler", 3, h)
        stepped = x + opt.step(q.grad(x))
        assert np.array_equal(apply_T(cfg, x), stepped)


def test_power_iteration_matches_eigvalsh():
    rng = SplitMix64(42)
    for _ in range(10):
        m = rng.normal_array((5, 5))
        a = m @ m.T + np.eye(5)
        assert abs(power_iteration(a) - np.linalg.eigvalsh(a)[-1]) <= 1e-8 * np.linalg.eigvalsh(a)[-1]


def test_lipschitz_estimate_brackets_top_eigenvalue():
    q = Quadratic.diag([1.0, 4.0])
    est = estimate_lipschitz(q.grad, [-10.0, -10.0], [10.0, 10.0], 10_000, seed=11)
    assert 3.9 <= est <= 4.0 + 1e-9
    # within 2.5% of the power-iteration ground truth
    assert est >= 0.975 * power_iteration(q.A)


def test_lipschitz_identity_and_constant_maps():
    lo, hi = np.full(3, -10.0), np.full(3, 10.0)
    assert abs(estimate_lipschitz(lambda x: x, lo, hi, 2000, seed=3) - 1.0) <= 1e-12
    assert estimate_lipschitz(lambda x: np.ones(3), lo, hi, 2000, seed=4) == 0.0


def test_lipschitz_requires_enough_pairs():
    with pytest.raises(ContractError):
        estimate_lipschitz(lambda x: x, [-1.0], [1.0], 10, seed=0)


def test_contraction_alpha_hand_values():
    assert_close(contraction_alpha(1.0, 1.0, 1.0), 0.0)
    assert_close(contraction_alpha(0.5, 1.0, 1.0), 0.5)  # gamma = 1/(2L), LG = L
    assert_close(contraction_alpha(1e-9, 1.0, 1.0), 1.0, tol=1e-8)  # gamma -> 0


def test_contraction_alpha_flags_bad_radicand():
    with pytest.raises(ContractError):
        contraction_alpha(1.0, 1.0, 2.0)  # 1 + 4 - 8 < 0
    # LG slightly above L from estimation noise still evaluates
    assert contraction_alpha(0.9, 1.0, 1.0000001) < 1.0


def test_alpha_at_or_above_one_means_no_guarantee():
    # tiny gamma leaves alpha just under 1; gamma above 2/L crosses above 1
    assert contraction_alpha(2.5, 1.0, 1.0) > 1.0


def test_iteration_converges_on_identity_quadratic():
    q = Quadratic(np.eye(1))
    cfg = OperatorConfig(objective=q, gamma=1.0)
    result = iterate_to_fixed_point(cfg, [1.0], tol=1e-8)
    assert result.converged
    assert abs(result.x[0]) <= 1e-8
    d = result.dist_to_opt
    assert np.all(np.diff(d[d > 0]) < 0)  # strictly decreasing until the floor


def test_iteration_at_optimum_stops_immediately():
    q = Quadratic(np.eye(2))
    cfg = OperatorConfig(objective=q, gamma=0.3)
    result = iterate_to_fixed_point(cfg, q.xstar, tol=1e-8)
    assert result.converged
    assert result.iterations == 0


def test_oversized_gamma_flagged_as_nonconvergent():
    q = Quadratic.diag([1.0, 100.0])
    cfg = OperatorConfig(objective=q, gamma=1.0)  # 100x the safe rate
    result = iterate_to_fixed_point(cfg, [0.5, 0.5], tol=1e-8, max_iter=3000)
    assert not result.converged


def test_near_fixed_point_small_residual():
    # ||grad|| <= tol forces ||Tx - x|| <= gamma * tol
    q = Quadratic.diag([2.0, 0.5])
    cfg = OperatorConfig(objective=q, gamma=0.4)
    result = iterate_to_fixed_point(cfg, [3.0, -2.0], tol=1e-8)
    assert result.converged
    residual = np.linalg.norm(apply_T(cfg, result.x) - result.x)
    assert residual <= cfg.gamma * 1e-8


def test_cocoercivity_identity_quadratic_clean():
    q = Quadratic(np.eye(2))
    report = verify_cocoercivity(q, n_pairs=10_000, seed=13)
    assert report.coco_violations == 0
    assert report.quad_violations == 0
    assert report.coco_max_violation == 0.0
    assert report.quad_max_violation == 0.0


def test_cocoercivity_anisotropic_quadratic_clean():
    q = Quadratic.diag([1.0, 4.0])
    report = verify_cocoercivity(q, n_pairs=10_000, seed=14)
    assert report.coco_violations == 0
    assert report.quad_violations == 0
    assert 3.8 <= report.lg_used <= 4.0 + 1e-9
    assert_close(report.l_used, 4.0, tol=1e-8)


def test_sample_pairs_stay_in_box():
    xs, ys = sample_pairs([-2.0, 0.0], [3.0, 1.0], 3000, seed=5)
    for block in (xs, ys):
        assert np.all(block[:, 0] >= -2.0) and np.all(block[:, 0] <= 3.0)
        assert np.all(block[:, 1] >= 0.0) and np.all(block[:, 1] <= 1.0)


def test_nonexpansiveness_holds_where_alpha_bound_does_not():
    # what the operator actually guarantees at gamma <= 1/L: pairwise
    # ratios never exceed 1 (nonexpansive), approaching 1 for far pairs
    q = Quadratic.diag([1.0, 4.0])
    cfg = OperatorConfig(objective=q, gamma=0.25)
    xs, ys = sample_pairs([-10.0, -10.0], [10.0, 10.0], 5000, seed=6)
    worst = 0.0
    for x, y in zip(xs, ys):
        dx = float(np.linalg.norm(x - y))
        if dx < 1e-12:
            continue
        worst = max(worst, float(np.linalg.norm(apply_T(cfg, x) - apply_T(cfg, y))) / dx)
    assert worst <= 1.0 + 1e-12
    assert worst > 0.9  # far pairs keep the global ratio near 1
