"""Schedule construction and the elementary chain operations."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mcslab import (
    NoiseSchedule,
    estimate_x0,
    forward_noise,
    make_linear_schedule,
    posterior_mean,
    posterior_sigma,
    posterior_step_from_x0,
    posterior_step_unguided,
)

# Frozen oracle: direct float product of (1 - beta_i) over the default
# linear grid, computed independently of the schedule code.
ALPHA_BAR_150 = 0.21921859918582318


def toy_schedule() -> NoiseSchedule:
    return NoiseSchedule.from_betas(np.array([0.1, 0.3]))


def test_linear_schedule_endpoints_and_sentinel():
    sched = make_linear_schedule()
    assert sched.T == 150
    assert sched.beta[0] == 0.0
    assert sched.alpha_bar[0] == 1.0
    assert sched.beta[1] == 1e-4
    assert sched.beta[150] == 0.02
    assert_allclose(sched.alpha_bar[150], ALPHA_BAR_150, rtol=1e-14)


def test_alpha_bar_strictly_decreasing():
    sched = make_linear_schedule()
    assert np.all(np.diff(sched.alpha_bar) < 0.0)


def test_from_betas_toy_values():
    sched = toy_schedule()
    assert sched.T == 2
    assert_allclose(sched.alpha_bar, [1.0, 0.9, 0.63], rtol=1e-15)


def test_schedule_validation():
    with pytest.raises(ValueError):
        NoiseSchedule.from_betas(np.array([]))
    with pytest.raises(ValueError):
        NoiseSchedule.from_betas(np.array([0.0, 0.1]))
    with pytest.raises(ValueError):
        NoiseSchedule.from_betas(np.array([0.1, 1.0]))
    with pytest.raises(ValueError):
        make_linear_schedule(0)
    with pytest.raises(ValueError):
        make_linear_schedule(10, 0.02, 0.01)  # start > end


def test_sigma2_terminal_step_deterministic():
    sched = toy_schedule()
    assert sched.sigma2(1) == 0.0
    assert posterior_sigma(sched, 1) == 0.0


def test_sigma2_frozen_value():
    # (1 - ab_1) / (1 - ab_2) * beta_2 with ab = (0.9, 0.63): 3/37.
    sched = toy_schedule()
    assert_allclose(sched.sigma2(2), 0.08108108108108107, rtol=1e-15)


def test_timestep_range_checked():
    sched = toy_schedule()
    x = np.zeros((2, 2))
    for bad_t in (0, 3, -1):
        with pytest.raises(ValueError):
            forward_noise(x, bad_t, sched, x)
        with pytest.raises(ValueError):
            sched.sigma2(bad_t)


def test_forward_noise_formula():
    sched = toy_schedule()
    x0 = np.array([[1.0, -2.0], [0.5, 0.0]])
    eps = np.array([[0.3, 1.0], [-0.7, 2.0]])
    got = forward_noise(x0, 2, sched, eps)
    expected = np.sqrt(0.63) * x0 + np.sqrt(1.0 - 0.63) * eps
    assert_allclose(got, expected, rtol=1e-15)


def test_noising_round_trip_all_t():
    sched = make_linear_schedule()
    rng = np.random.default_rng(7)
    x0 = rng.standard_normal((6, 6))
    for t in range(1, sched.T + 1):
        eps = rng.standard_normal(x0.shape)
        x_t = forward_noise(x0, t, sched, eps)
        assert_allclose(estimate_x0(x_t, eps, t, sched), x0, atol=1e-8)


def test_posterior_mean_frozen_value():
    # mu = (x - beta_t / sqrt(1 - ab_t) * eps) / sqrt(alpha_t) at
    # t = 2, x = 1, eps = 0.5 on the (0.1, 0.3) schedule.
    sched = toy_schedule()
    got = posterior_mean(np.array(1.0), np.array(0.5), 2, sched)
    assert_allclose(got, 0.9004870498749464, rtol=1e-14)


def test_unguided_step_is_mean_plus_scaled_noise():
    sched = toy_schedule()
    rng = np.random.default_rng(3)
    x = rng.standard_normal((3, 3))
    eps = rng.standard_normal((3, 3))
    z = rng.standard_normal((3, 3))
    got = posterior_step_unguided(x, eps, 2, sched, z)
    expected = posterior_mean(x, eps, 2, sched) + posterior_sigma(sched, 2) * z
    assert_allclose(got, expected, rtol=1e-15)


def test_final_step_ignores_noise():
    sched = toy_schedule()
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 3))
    eps = rng.standard_normal((3, 3))
    a = posterior_step_unguided(x, eps, 1, sched, np.full((3, 3), 100.0))
    b = posterior_step_unguided(x, eps, 1, sched, np.zeros((3, 3)))
    assert_allclose(a, b, rtol=0, atol=0)
    assert_allclose(a, posterior_mean(x, eps, 1, sched), rtol=0, atol=0)


def test_x0_form_step_matches_eps_form():
    # Substituting x0 = estimate_x0(...) must reproduce the eps-form step.
    sched = make_linear_schedule(20)
    rng = np.random.default_rng(11)
    x = rng.standard_normal((4, 4))
    eps = rng.standard_normal((4, 4))
    z = rng.standard_normal((4, 4))
    for t in (1, 2, 10, 20):
        x0 = estimate_x0(x, eps, t, sched)
        a = posterior_step_from_x0(x, x0, t, sched, z)
        b = posterior_step_unguided(x, eps, t, sched, z)
        assert_allclose(a, b, rtol=0, atol=1e-12)


def test_x0_form_step_frozen_coefficients():
    # Independently derived: coef_x0 = sqrt(ab_1) beta_2 / (1 - ab_2),
    # coef_xt = sqrt(alpha_2) (1 - ab_1) / (1 - ab_2).
    sched = toy_schedule()
    x = np.array(2.0)
    x0 = np.array(-1.0)
    got = posterior_step_from_x0(x, x0, 2, sched, np.array(0.0))
    expected = 0.7692026740950111 * (-1.0) + 0.22612433149569605 * 2.0
    assert_allclose(got, expected, rtol=1e-14)


def test_x0_form_terminal_step_returns_x0():
    sched = toy_schedule()
    x0 = np.array([[0.25, -1.5], [3.0, 0.0]])
    x = np.array([[5.0, 5.0], [5.0, 5.0]])
    got = posterior_step_from_x0(x, x0, 1, sched, np.ones((2, 2)))
    assert_allclose(got, x0, rtol=0, atol=1e-15)


def test_forward_noise_distribution():
    # Over many draws the level-t marginal has mean sqrt(ab) x0 and
    # per-pixel variance (1 - ab); check within 3 standard errors.
    sched = make_linear_schedule()
    t = 100
    ab = sched.alpha_bar[t]
    n = 10_000
    rng = np.random.default_rng(123)
    x0 = np.array([[0.2, -0.4], [1.0, 0.6]])
    draws = np.stack([forward_noise(x0, t, sched, rng.standard_normal(x0.shape)) for _ in range(n)])
    mean_se = np.sqrt((1.0 - ab) / n)
    assert np.all(np.abs(draws.mean(axis=0) - np.sqrt(ab) * x0) < 3.0 * mean_se)
    var_se = (1.0 - ab) * np.sqrt(2.0 / (n - 1))
    assert np.all(np.abs(draws.var(axis=0, ddof=1) - (1.0 - ab)) < 3.0 * var_se)
