"""Mixture prior conditionals against closed forms and quadrature oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import multivariate_normal

from mcslab import (
    DenseOperator,
    GmmPrior,
    avgpool_op,
    component_assign,
    condition_restrict,
    denoiser_from_prior,
    estimate_x0,
    gmm_eps_pred,
    gmm_exact_posterior,
    gmm_sample,
    gmm_x0_mean,
    make_linear_schedule,
    point_prior,
    scalar_pair_prior,
)
from mcslab.gmm import _noised_log_resp


def two_component_1d() -> GmmPrior:
    return GmmPrior(
        weights=np.array([0.3, 0.7]),
        means=np.array([[-1.0], [2.0]]),
        variances=np.array([[0.5], [0.25]]),
        labels=("lo", "hi"),
    )


def test_prior_validation():
    with pytest.raises(ValueError):
        GmmPrior(np.array([0.5, 0.6]), np.zeros((2, 3)), np.ones((2, 3)), ("a", "b"))
    with pytest.raises(ValueError):
        GmmPrior(np.array([0.5, 0.5]), np.zeros((2, 3)), np.ones((2, 3)), ("a", "a"))
    with pytest.raises(ValueError):
        GmmPrior(np.array([0.5, 0.5]), np.zeros((2, 3)), -np.ones((2, 3)), ("a", "b"))
    with pytest.raises(ValueError):
        GmmPrior(np.array([1.0]), np.zeros((1, 4)), np.ones((1, 4)), ("a",), image_shape=(2, 3))


def test_condition_restrict_preserves_order_and_renormalises():
    p = GmmPrior(
        weights=np.array([0.2, 0.3, 0.5]),
        means=np.zeros((3, 2)),
        variances=np.ones((3, 2)),
        labels=("a", "b", "c"),
    )
    q = condition_restrict(p, ("c", "a"))
    assert q.labels == ("a", "c")
    assert_allclose(q.weights, [0.2 / 0.7, 0.5 / 0.7], rtol=1e-15)
    assert condition_restrict(p, None) is p
    with pytest.raises(ValueError):
        condition_restrict(p, ("nope",))
    with pytest.raises(ValueError):
        condition_restrict(p, ())


def test_single_gaussian_conjugate_mean():
    # Frozen oracle for prior N(0.5, 0.25), ab = 0.63, x_t = 1.3:
    # (sqrt(ab) s0^2 x + (1-ab) m0) / (ab s0^2 + 1-ab) computed by hand.
    prior = GmmPrior(
        weights=np.array([1.0]),
        means=np.array([[0.5]]),
        variances=np.array([[0.25]]),
        labels=("only",),
    )
    sched = make_linear_schedule(2, 0.1, 0.3)  # alpha_bar = (0.9, 0.63)
    got = gmm_x0_mean(prior, np.array([1.3]), 2, sched)
    assert_allclose(got, [0.8397360243199955], rtol=1e-14)


def test_single_gaussian_conjugate_closed_form_many_t():
    rng = np.random.default_rng(0)
    d = 6
    m0 = rng.standard_normal(d)
    v0 = rng.uniform(0.1, 2.0, d)
    prior = GmmPrior(np.array([1.0]), m0[None, :], v0[None, :], ("g",))
    sched = make_linear_schedule()
    for t in (1, 40, 90, 150):
        ab = sched.alpha_bar[t]
        x = rng.standard_normal(d)
        expected = (np.sqrt(ab) * v0 * x + (1.0 - ab) * m0) / (ab * v0 + 1.0 - ab)
        assert_allclose(gmm_x0_mean(prior, x, t, sched), expected, atol=1e-8)


def test_responsibilities_hand_computed():
    p = two_component_1d()
    sched = make_linear_schedule(2, 0.1, 0.3)
    ab = 0.63
    x = np.array([0.4])
    # Hand log-sum-exp over N(sqrt(ab) mu_k, ab v_k + 1 - ab).
    logs = []
    for w, mu, v in ((0.3, -1.0, 0.5), (0.7, 2.0, 0.25)):
        var = ab * v + 1.0 - ab
        logs.append(
            np.log(w) - 0.5 * (np.log(2.0 * np.pi * var) + (0.4 - np.sqrt(ab) * mu) ** 2 / var)
        )
    logs = np.array(logs)
    expected = logs - np.log(np.sum(np.exp(logs)))
    assert_allclose(_noised_log_resp(p, x, ab), expected, atol=1e-12)


def quadrature_x0_mean(prior, x_t, ab, lo=-8.0, hi=10.0, n=20001):
    """Trapezoid-rule E[x0 | x_t] for a 1-d mixture (independent oracle)."""
    grid = np.linspace(lo, hi, n)
    post = np.zeros_like(grid)
    for w, mu, v in zip(prior.weights, prior.means[:, 0], prior.variances[:, 0]):
        p0 = np.exp(-0.5 * (grid - mu) ** 2 / v) / np.sqrt(2.0 * np.pi * v)
        lik = np.exp(-0.5 * (x_t - np.sqrt(ab) * grid) ** 2 / (1.0 - ab))
        post += w * p0 * lik
    z = np.trapezoid(post, grid)
    return np.trapezoid(grid * post, grid) / z


def test_denoiser_matches_quadrature_1d():
    prior = two_component_1d()
    sched = make_linear_schedule()
    for t, xt in ((30, 0.7), (90, -0.2), (140, 1.5)):
        ab = sched.alpha_bar[t]
        expected = quadrature_x0_mean(prior, xt, ab)
        got = gmm_x0_mean(prior, np.array([xt]), t, sched)[0]
        assert abs(got - expected) < 1e-4


def test_denoiser_matches_quadrature_2d():
    prior = scalar_pair_prior()
    sched = make_linear_schedule()
    t = 75
    ab = sched.alpha_bar[t]
    x_t = np.array([[0.9, 0.1]])
    g = np.linspace(-5.0, 6.0, 401)
    g0, g1 = np.meshgrid(g, g, indexing="ij")
    dens = np.zeros_like(g0)
    for w, mu, v in zip(prior.weights, prior.means, prior.variances):
        p0 = np.exp(-0.5 * ((g0 - mu[0]) ** 2 / v[0] + (g1 - mu[1]) ** 2 / v[1]))
        lik = np.exp(
            -0.5 * ((x_t[0, 0] - np.sqrt(ab) * g0) ** 2 + (x_t[0, 1] - np.sqrt(ab) * g1) ** 2)
            / (1.0 - ab)
        )
        dens += w * p0 * lik / (2.0 * np.pi * np.sqrt(v[0] * v[1]))
    z = np.trapezoid(np.trapezoid(dens, g, axis=1), g)
    e0 = np.trapezoid(np.trapezoid(g0 * dens, g, axis=1), g) / z
    e1 = np.trapezoid(np.trapezoid(g1 * dens, g, axis=1), g) / z
    got = gmm_x0_mean(prior, x_t, t, sched)
    assert_allclose(got, [[e0, e1]], atol=1e-4)


def test_eps_conversion_identity():
    prior = two_component_1d()
    sched = make_linear_schedule()
    t = 60
    x_t = np.array([0.9])
    eps = gmm_eps_pred(prior, x_t, t, sched)
    # estimate_x0 must invert the conversion back to the posterior mean.
    assert_allclose(estimate_x0(x_t, eps, t, sched), gmm_x0_mean(prior, x_t, t, sched), atol=1e-12)


def test_eps_is_negative_scaled_score():
    # Tweedie: eps = -sqrt(1-ab) * grad log p_t, checked by central difference.
    prior = two_component_1d()
    sched = make_linear_schedule()
    t = 100
    ab = sched.alpha_bar[t]
    x = 0.35
    h = 1e-6

    def log_marginal(v):
        m = np.sqrt(ab) * prior.means[:, 0]
        var = ab * prior.variances[:, 0] + 1.0 - ab
        comp = prior.weights * np.exp(-0.5 * (v - m) ** 2 / var) / np.sqrt(2.0 * np.pi * var)
        return np.log(np.sum(comp))

    score = (log_marginal(x + h) - log_marginal(x - h)) / (2.0 * h)
    eps = gmm_eps_pred(prior, np.array([x]), t, sched)[0]
    assert_allclose(eps, -np.sqrt(1.0 - ab) * score, atol=1e-7)


def test_denoiser_closure_binds_condition():
    prior = two_component_1d()
    sched = make_linear_schedule()
    den = denoiser_from_prior(prior, sched)
    x = np.array([0.1])
    got = den(x, 50, ("hi",))
    expected = gmm_eps_pred(condition_restrict(prior, ("hi",)), x, 50, sched)
    assert_allclose(got, expected, rtol=0, atol=0)


def test_gmm_sample_statistics():
    prior = two_component_1d()
    rng = np.random.default_rng(42)
    n = 4000
    labels = []
    vals = []
    for _ in range(n):
        x, lab = gmm_sample(prior, rng)
        labels.append(lab)
        vals.append(x[0])
    frac_hi = labels.count("hi") / n
    assert abs(frac_hi - 0.7) < 3.0 * np.sqrt(0.7 * 0.3 / n)
    mean = 0.3 * -1.0 + 0.7 * 2.0
    var = 0.3 * (0.5 + 1.0**2) + 0.7 * (0.25 + 4.0) - mean**2
    assert abs(np.mean(vals) - mean) < 3.0 * np.sqrt(var / n)


def test_gmm_sample_condition():
    prior = two_component_1d()
    rng = np.random.default_rng(1)
    for _ in range(20):
        _, lab = gmm_sample(prior, rng, cond=("lo",))
        assert lab == "lo"


def test_component_assign_and_tie_break():
    prior = GmmPrior(
        weights=np.array([0.5, 0.5]),
        means=np.array([[-1.0], [1.0]]),
        variances=np.array([[0.4], [0.4]]),
        labels=("left", "right"),
    )
    assert component_assign(prior, np.array([-0.9])) == "left"
    assert component_assign(prior, np.array([0.9])) == "right"
    # Exactly equidistant between identical components: earliest wins.
    assert component_assign(prior, np.array([0.0])) == "left"


def test_exact_posterior_scalar_conjugate():
    # d = 1, A = identity scalar, single component: textbook conjugate update.
    prior = GmmPrior(np.array([1.0]), np.array([[0.5]]), np.array([[0.5]]), ("g",))
    A = DenseOperator(np.array([[1.0]]), (1, 1), (1, 1))
    y, nv = 1.2, 0.3
    post = gmm_exact_posterior(prior, A, np.array([y]), nv)
    expected_var = 1.0 / (1.0 / 0.5 + 1.0 / nv)
    expected_mean = expected_var * (0.5 / 0.5 + y / nv)
    assert_allclose(post.means[0, 0], expected_mean, rtol=1e-12)
    assert_allclose(post.covariances[0, 0, 0], expected_var, rtol=1e-12)


def test_exact_posterior_weights_match_quadrature():
    # Mean measurement of the d = 2 pair prior; posterior component weights
    # must equal evidence integrals computed on a grid.
    prior = scalar_pair_prior(offset=0.4, sigma=0.3)
    A = DenseOperator(np.array([[0.5, 0.5]]), (1, 2), (1, 1))
    y = np.array([[0.8]])
    nv = 0.05
    post = gmm_exact_posterior(prior, A, y.ravel(), nv)
    evs = []
    for mu, v in zip(prior.means, prior.variances):
        # y | k is N(mean(mu), mean-projected variance + nv), 1-d closed form.
        m = 0.5 * (mu[0] + mu[1])
        var = 0.25 * (v[0] + v[1]) + nv
        evs.append(np.exp(-0.5 * (0.8 - m) ** 2 / var) / np.sqrt(2.0 * np.pi * var))
    evs = np.array(evs) * prior.weights
    assert_allclose(post.weights, evs / evs.sum(), rtol=1e-10)


def test_exact_posterior_mean_interpolates_identity_limit():
    # With A = I and tiny noise the posterior collapses onto y.
    prior = scalar_pair_prior()
    A = DenseOperator(np.eye(2), (1, 2), (1, 2))
    y = np.array([1.05, -0.05])
    post = gmm_exact_posterior(prior, A, y, 1e-8)
    assert_allclose(post.mean(), y, atol=1e-4)


def test_exact_posterior_zero_noise_uses_floor():
    prior = scalar_pair_prior()
    A = DenseOperator(np.array([[0.5, 0.5]]), (1, 2), (1, 1))
    post = gmm_exact_posterior(prior, A, np.array([0.5]), 0.0)
    # Posterior means reproduce the measurement through A.
    for k in range(post.K):
        assert abs(0.5 * post.means[k].sum() - 0.5) < 1e-6
    with pytest.raises(ValueError):
        gmm_exact_posterior(prior, A, np.array([0.5]), -1.0)


def test_exact_posterior_log_density_matches_scipy():
    prior = GmmPrior(np.array([1.0]), np.array([[0.2, -0.1]]), np.array([[0.3, 0.6]]), ("g",))
    A = DenseOperator(np.array([[1.0, 0.5]]), (1, 2), (1, 1))
    post = gmm_exact_posterior(prior, A, np.array([0.7]), 0.1)
    x = np.array([0.4, 0.1])
    ref = multivariate_normal(mean=post.means[0], cov=post.covariances[0]).logpdf(x)
    assert_allclose(post.log_density(x), ref, rtol=1e-10)


def test_exact_posterior_sample_moments():
    prior = scalar_pair_prior(offset=0.3, sigma=0.2)
    A = DenseOperator(np.array([[0.5, 0.5]]), (1, 2), (1, 1))
    post = gmm_exact_posterior(prior, A, np.array([0.6]), 0.02)
    rng = np.random.default_rng(9)
    draws = np.stack([post.sample(rng)[0] for _ in range(8000)])
    target = post.mean()
    se = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - target) < 3.5 * se)


def test_point_prior_denoiser_pins_mean():
    mean = np.array([[0.3, 0.8], [0.1, 0.5]])
    prior = point_prior(mean, sigma=1e-5)
    sched = make_linear_schedule()
    x = np.random.default_rng(3).standard_normal((2, 2))
    x0 = gmm_x0_mean(prior, x, 120, sched)
    assert_allclose(x0, mean, atol=1e-3)
