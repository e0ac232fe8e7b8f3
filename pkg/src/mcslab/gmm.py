"""Gaussian mixture data prior with closed-form diffusion conditionals.

The prior has diagonal per-component covariances.  Because every forward
marginal of the diffusion chain is again a Gaussian mixture, the exact
posterior-mean denoiser (and hence the exact noise predictor) is available
in closed form -- this stands in for a learned network everywhere in the
package.

For linear-Gaussian measurements the exact restoration posterior is also a
mixture, but with full covariances; :func:`gmm_exact_posterior` returns it
as a :class:`GaussianMixture` and serves as the ground-truth oracle that
samplers are judged against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .operators import LinearOperator

__all__ = [
    "GmmPrior",
    "GaussianMixture",
    "condition_restrict",
    "gmm_eps_pred",
    "gmm_x0_mean",
    "gmm_sample",
    "component_assign",
    "gmm_exact_posterior",
    "denoiser_from_prior",
    "NOISE_FLOOR",
]

# Variance floor substituted for an exactly-zero measurement noise level.
NOISE_FLOOR = 1e-9

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GmmPrior:
    """Mixture with diagonal covariances over flattened images.

    ``means`` is (K, d), ``variances`` is (K, d) of per-pixel variances,
    ``weights`` a length-K simplex, ``labels`` K distinct component names.
    ``image_shape`` optionally records the (h, w) grid the vectors flatten.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    labels: tuple[str, ...]
    image_shape: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        self.labels = tuple(self.labels)
        K, d = self.means.shape
        if self.weights.shape != (K,):
            raise ValueError("weights must have one entry per component")
        if self.variances.shape != (K, d):
            raise ValueError("variances must match means in shape")
        if len(self.labels) != K or len(set(self.labels)) != K:
            raise ValueError("labels must be distinct, one per component")
        if np.any(self.weights <= 0.0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(self.variances <= 0.0):
            raise ValueError("variances must be positive")
        if self.image_shape is not None:
            h, w = self.image_shape
            if h * w != d:
                raise ValueError(f"image_shape {self.image_shape} incompatible with d={d}")
            self.image_shape = (int(h), int(w))

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


def condition_restrict(prior: GmmPrior, cond) -> GmmPrior:
    """Restrict the mixture to a label subset and renormalise the weights.

    ``cond`` is None (no restriction) or an iterable of labels.  Component
    order is preserved.  An empty intersection is an error.
    """
    if cond is None:
        return prior
    wanted = set(cond)
    unknown = wanted - set(prior.labels)
    if unknown:
        raise ValueError(f"condition names unknown labels: {sorted(unknown)}")
    keep = [i for i, lab in enumerate(prior.labels) if lab in wanted]
    if not keep:
        raise ValueError("condition selects no component")
    w = prior.weights[keep]
    return GmmPrior(
        weights=w / w.sum(),
        means=prior.means[keep],
        variances=prior.variances[keep],
        labels=tuple(prior.labels[i] for i in keep),
        image_shape=prior.image_shape,
    )


def _noised_log_resp(prior: GmmPrior, x: np.ndarray, ab: float) -> np.ndarray:
    """Log responsibilities under the level-ab forward marginal.

    Component k of the marginal is N(sqrt(ab) mu_k, ab Sigma_k + (1-ab) I);
    with ab = 1 this is the data-space mixture itself.
    """
    m = np.sqrt(ab) * prior.means
    v = ab * prior.variances + (1.0 - ab)
    log_p = -0.5 * np.sum(_LOG_2PI + np.log(v) + (x[None, :] - m) ** 2 / v, axis=1)
    log_r = np.log(prior.weights) + log_p
    return log_r - logsumexp(log_r)


def gmm_x0_mean(prior: GmmPrior, x_t: np.ndarray, t: int, sched, cond=None) -> np.ndarray:
    """Exact posterior mean E[x_0 | x_t] under the (restricted) mixture.

    Per component the joint of (x_0, x_t) is Gaussian, so

        E_k[x_0 | x_t] = mu_k + sqrt(ab) Sigma_k / (ab Sigma_k + (1-ab) I)
                               * (x_t - sqrt(ab) mu_k)

    and the overall mean weighs these by the noised responsibilities.
    """
    p = condition_restrict(prior, cond)
    sched._check_t(t)
    ab = float(sched.alpha_bar[t])
    x = x_t.ravel()
    if x.size != p.d:
        raise ValueError(f"state has {x.size} entries, prior expects {p.d}")
    m = np.sqrt(ab) * p.means
    v = ab * p.variances + (1.0 - ab)
    r = np.exp(_noised_log_resp(p, x, ab))
    cond_means = p.means + (np.sqrt(ab) * p.variances / v) * (x[None, :] - m)
    return (r[:, None] * cond_means).sum(axis=0).reshape(x_t.shape)


def gmm_eps_pred(prior: GmmPrior, x_t: np.ndarray, t: int, sched, cond=None) -> np.ndarray:
    """Exact noise predictor implied by the posterior mean.

    eps = (x_t - sqrt(ab) E[x_0 | x_t]) / sqrt(1 - ab).  Equivalently
    (Tweedie) eps = -sqrt(1 - ab) * grad log p_t(x_t).
    """
    ab = float(sched.alpha_bar[t])
    x0 = gmm_x0_mean(prior, x_t, t, sched, cond)
    return (x_t - np.sqrt(ab) * x0) / np.sqrt(1.0 - ab)


def denoiser_from_prior(prior: GmmPrior, sched):
    """Bind prior and schedule into the sampler-facing callable.

    The returned function has the denoiser protocol used by all samplers:
    ``denoise(x_t, t, cond) -> eps``.
    """

    def denoise(x_t: np.ndarray, t: int, cond=None) -> np.ndarray:
        return gmm_eps_pred(prior, x_t, t, sched, cond)

    return denoise


def gmm_sample(prior: GmmPrior, rng: np.random.Generator, cond=None):
    """Draw (x, label) from the (restricted) mixture."""
    p = condition_restrict(prior, cond)
    k = int(rng.choice(p.K, p=p.weights))
    x = p.means[k] + np.sqrt(p.variances[k]) * rng.standard_normal(p.d)
    return x, p.labels[k]


def component_assign(prior: GmmPrior, x: np.ndarray) -> str:
    """Label of the most responsible component at the data level.

    Ties resolve to the earliest component.
    """
    x = x.ravel()
    if x.size != prior.d:
        raise ValueError(f"vector has {x.size} entries, prior expects {prior.d}")
    log_r = _noised_log_resp(prior, x, 1.0)
    return prior.labels[int(np.argmax(log_r))]


@dataclass
class GaussianMixture:
    """Full-covariance mixture (the shape exact restoration posteriors take)."""

    weights: np.ndarray
    means: np.ndarray        # (K, d)
    covariances: np.ndarray  # (K, d, d)
    labels: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        K, d = self.means.shape
        if self.covariances.shape != (K, d, d):
            raise ValueError("covariances must be (K, d, d)")
        if self.weights.shape != (K,):
            raise ValueError("weights must have one entry per component")
        if not self.labels:
            self.labels = tuple(str(i) for i in range(K))
        self._chol = [np.linalg.cholesky(c) for c in self.covariances]

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def component_log_density(self, x: np.ndarray) -> np.ndarray:
        x = x.ravel()
        logs = np.empty(self.K)
        for k, L in enumerate(self._chol):
            diff = x - self.means[k]
            z = _solve_lower(L, diff)
            logdet = 2.0 * np.sum(np.log(np.diag(L)))
            logs[k] = -0.5 * (self.d * _LOG_2PI + logdet + z @ z)
        return logs

    def log_density(self, x: np.ndarray) -> float:
        return float(logsumexp(self.component_log_density(x) + np.log(self.weights)))

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        log_r = self.component_log_density(x) + np.log(self.weights)
        return np.exp(log_r - logsumexp(log_r))

    def sample(self, rng: np.random.Generator):
        k = int(rng.choice(self.K, p=self.weights))
        z = rng.standard_normal(self.d)
        return self.means[k] + self._chol[k] @ z, self.labels[k]

    def mean(self) -> np.ndarray:
        return (self.weights[:, None] * self.means).sum(axis=0)


def _solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    from scipy.linalg import solve_triangular

    return solve_triangular(L, b, lower=True)


def gmm_exact_posterior(
    prior: GmmPrior, A: LinearOperator, y: np.ndarray, noise_var: float
) -> GaussianMixture:
    """Exact posterior mixture for y = A x + N(0, noise_var I), x ~ prior.

    Per component the conjugate update gives a full-covariance Gaussian

        S_k = (Sigma_k^{-1} + A^T A / nv)^{-1}
        m_k = S_k (Sigma_k^{-1} mu_k + A^T y / nv)

    and the weights are reweighted by the marginal evidence
    N(y; A mu_k, A Sigma_k A^T + nv I).  ``noise_var = 0`` is replaced by
    the documented floor so the update stays well posed.
    """
    from scipy.linalg import cho_factor, cho_solve

    if noise_var < 0.0:
        raise ValueError("noise variance must be >= 0")
    nv = max(float(noise_var), NOISE_FLOOR)
    M = A.as_matrix()
    yv = np.asarray(y, dtype=np.float64).ravel()
    m_obs, d = M.shape
    if yv.size != m_obs:
        raise ValueError(f"observation has {yv.size} entries, operator emits {m_obs}")
    if d != prior.d:
        raise ValueError("operator domain does not match the prior dimension")

    MtM = M.T @ M
    Mty = M.T @ yv
    means = np.empty((prior.K, d))
    covs = np.empty((prior.K, d, d))
    log_w = np.empty(prior.K)
    eye_obs = np.eye(m_obs)
    for k in range(prior.K):
        v = prior.variances[k]
        mu = prior.means[k]
        prec = MtM / nv + np.diag(1.0 / v)
        c, low = cho_factor(prec)
        S = cho_solve((c, low), np.eye(d))
        S = 0.5 * (S + S.T)
        m_post = cho_solve((c, low), mu / v + Mty / nv)
        # Evidence: N(y; A mu, A Sigma A^T + nv I).
        C = (M * v[None, :]) @ M.T + nv * eye_obs
        cc, cl = cho_factor(C)
        diff = yv - M @ mu
        z = cho_solve((cc, cl), diff)
        logdet = 2.0 * np.sum(np.log(np.diag(cc)))
        log_ev = -0.5 * (m_obs * _LOG_2PI + logdet + diff @ z)
        means[k] = m_post
        covs[k] = S
        log_w[k] = np.log(prior.weights[k]) + log_ev
    log_w -= logsumexp(log_w)
    return GaussianMixture(
        weights=np.exp(log_w), means=means, covariances=covs, labels=prior.labels
    )
