import math

import numpy as np
import pytest

from geoadaler.errors import ContractError
from geoadaler.objectives import RandomLinearSequence, ReddiSequence
from geoadaler.online import (BoundConstants, RegretTrace, integral_test_check,
                              log_checkpoints, regret_bound,
                              regret_bound_appendix, run_online,
                              sublinearity_check)
from geoadaler.optimizers import HyperParams, make_optimizer

from conftest import assert_close

THEOREM_SCHEDULE = dict(gamma=1.0, beta=0.9, lam=0.999,
                        lr_schedule="inverse_sqrt", beta_schedule="exponential")


def test_bound_theorem_hand_value():
    c = BoundConstants(D=1.0, G=1.0, beta=0.0, lam=0.5, T=1)
    assert_close(regret_bound(c), (math.sqrt(2.0) + 1.0) / 2.0)
    # at beta = 0 the lambda-dependent term vanishes entirely
    c2 = BoundConstants(D=1.0, G=1.0, beta=0.0, lam=0.9999, T=1)
    assert regret_bound(c) == regret_bound(c2)


def test_bound_appendix_hand_value():
    c = BoundConstants(D=1.0, G=1.0, beta=0.0, lam=0.5, T=1)
    assert_close(regret_bound_appendix(c, gamma=1.0), math.sqrt(2.0) + 0.5)
    # beta = 0 leaves sqrt(T) D^2 sqrt(G^2+1) + G^2 (2 sqrt(T)-1)/2
    c4 = BoundConstants(D=1.0, G=1.0, beta=0.0, lam=0.5, T=4)
    assert_close(regret_bound_appendix(c4, gamma=1.0), 2.0 * math.sqrt(2.0) + 1.5)


def test_bound_second_term_saturates_geometrically():
    # D G beta (1 - lam^T)/((1-beta)(1-lam)) approaches its geometric-series
    # limit; isolate it by differencing bounds at T and 2T where the sqrt(T)
    # parts are known in closed form
    def second_term(T):
        c = BoundConstants(D=2.0, G=3.0, beta=0.9, lam=0.9, T=T)
        root_t = math.sqrt(T)
        first = (4.0 * math.sqrt(10.0) * root_t + 3.0 * (2.0 * root_t - 1.0)) / 0.2
        return regret_bound(c) - first

    limit = 2.0 * 3.0 * 0.9 / ((1 - 0.9) * (1 - 0.9))
    assert_close(second_term(10**6), limit, tol=1e-6)
    assert second_term(10) < second_term(100) < limit


def test_bound_average_decays_like_inverse_sqrt():
    def avg(T):
        c = BoundConstants(D=2.0, G=3.0, beta=0.9, lam=0.999, T=T)
        return regret_bound(c) / T

    # asymptotically one decade of T shrinks bound/T by sqrt(10) per half
    # decade pair; with the lambda term still growing at T=100 the first
    # hop falls just short of a full factor ten
    assert avg(10**4) <= 0.11 * avg(10**2)
    assert avg(10**6) <= 0.10 * avg(10**4)


def test_bound_rejects_degenerate_constants():
    with pytest.raises(ContractError):
        BoundConstants(D=1.0, G=1.0, beta=1.0, lam=0.5, T=1)
    with pytest.raises(ContractError):
        BoundConstants(D=1.0, G=1.0, beta=0.5, lam=1.0, T=1)


def test_integral_test_values():
    assert integral_test_check(1) == (1.0, 1.0)
    lhs, rhs = integral_test_check(4)
    assert_close(lhs, 2.7844570503761732)  # 1 + 1/sqrt(2) + 1/sqrt(3) + 1/2
    assert rhs == 3.0
    assert lhs <= rhs
    lhs6, rhs6 = integral_test_check(10**6)
    assert lhs6 <= rhs6


def test_log_checkpoints_cover_endpoints():
    pts = log_checkpoints(10**4)
    assert pts[0] == 1 and pts[-1] == 10**4
    assert pts == sorted(set(pts))
    assert log_checkpoints(1) == [1]


def test_run_starting_at_optimum_has_zero_first_regret():
    seq = ReddiSequence(3.0)
    opt = make_optimizer("geoadaler", 1, HyperParams(**THEOREM_SCHEDULE))
    trace = run_online(opt, seq, 1, project=True, x0=[-1.0])
    assert_close(trace.cum_regret, [0.0])


def test_zero_loss_sequence_gives_zero_regret():
    seq = RandomLinearSequence(dim=2, horizon=50, seed=2, grad_bound=0.0)
    for name in ("geoadaler", "geoadamax", "adam", "amsgrad"):
        opt = make_optimizer(name, 2)
        trace = run_online(opt, seq, 50)
        assert np.all(trace.cum_regret == 0.0)


def test_geoadamax_average_regret_trends_down_on_reddi():
    seq = ReddiSequence(3.0)
    opt = make_optimizer("geoadamax", 1, HyperParams(**THEOREM_SCHEDULE))
    trace = run_online(opt, seq, 3000, project=True)
    report = sublinearity_check(trace, windows=[30, 300, 3000], slack=0.05)
    assert report.ok, report.failures


def test_cumulative_column_is_exact_prefix_sum():
    seq = ReddiSequence(3.0)
    opt = make_optimizer("geoadaler", 1, HyperParams(**THEOREM_SCHEDULE))
    trace = run_online(opt, seq, 500)
    assert np.array_equal(trace.cum_regret, np.cumsum(trace.inst_regret))
    assert np.array_equal(trace.inst_regret, trace.loss - trace.opt_loss)


def test_measured_columns_monotone_and_bounded_by_box():
    seq = ReddiSequence(3.0)
    opt = make_optimizer("geoadaler", 1, HyperParams(**THEOREM_SCHEDULE))
    trace = run_online(opt, seq, 400, project=True)
    assert np.all(np.diff(trace.measured_D) >= 0)
    assert np.all(np.diff(trace.measured_G) >= 0)
    assert trace.measured_D[-1] <= 2.0 + 1e-12  # box diameter of [-1, 1]
    assert trace.measured_G[-1] == 3.0


def test_convexity_regret_inequality_linear_and_quadratic():
    # linear losses: regret equals the gradient-gap sum exactly
    seq = ReddiSequence(3.0)
    opt = make_optimizer("geoadaler", 1, HyperParams(**THEOREM_SCHEDULE))
    T = 300
    x = seq.center()
    lhs = 0.0
    rhs = 0.0
    xs = []
    for t in range(1, T + 1):
        xs.append(x.copy())
        value, g = seq.eval(t, x)
        x = np.clip(x + opt.step(g), seq.lo, seq.hi)
    from geoadaler.objectives import offline_minimizer

    xstar = offline_minimizer(seq, T)
    for t, xt in enumerate(xs, start=1):
        value, g = seq.eval(t, xt)
        opt_value, _ = seq.eval(t, xstar)
        lhs += value - opt_value
        rhs += float(g @ (xt - xstar))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def test_bound_validity_on_random_linear_sequences():
    for seed in (1, 2, 3):
        seq = RandomLinearSequence(dim=2, horizon=2000, seed=seed)
        opt = make_optimizer("geoadaler", 2, HyperParams(**THEOREM_SCHEDULE))
        trace = run_online(opt, seq, 2000, project=True)
        for t in log_checkpoints(2000):
            bound = max(trace.bound_theorem[t - 1], trace.bound_appendix[t - 1])
            assert trace.cum_regret[t - 1] <= bound, (seed, t)


def test_sublinearity_negative_control():
    t = np.arange(1, 101)
    worsening = t.astype(np.float64) ** 1.5
    trace = RegretTrace(
        t=t, loss=np.zeros(100), opt_loss=np.zeros(100),
        inst_regret=np.diff(np.concatenate([[0.0], worsening])),
        cum_regret=worsening, regret_over_t=worsening / t,
        measured_D=np.ones(100), measured_G=np.ones(100),
        bound_theorem=np.ones(100), bound_appendix=np.ones(100),
        x_star=np.zeros(1),
    )
    report = sublinearity_check(trace, windows=[10, 100])
    assert not report.ok
    assert report.failures


def test_sublinearity_all_zero_passes():
    zeros = np.zeros(50)
    trace = RegretTrace(
        t=np.arange(1, 51), loss=zeros, opt_loss=zeros, inst_regret=zeros,
        cum_regret=zeros, regret_over_t=zeros, measured_D=zeros,
        measured_G=zeros, bound_theorem=zeros, bound_appendix=zeros,
        x_star=np.zeros(1),
    )
    assert sublinearity_check(trace, windows=[10, 50]).ok


def test_run_online_rejects_bad_start():
    seq = ReddiSequence(3.0)
    opt = make_optimizer("geoadaler", 1)
    with pytest.raises(ContractError):
        run_online(opt, seq, 10, x0=[2.0])  # outside the box
    with pytest.raises(ContractError):
        run_online(make_optimizer("geoadaler", 3), seq, 10)  # dim mismatch
    with pytest.raises(ContractError):
        run_online(opt, seq, 0)
