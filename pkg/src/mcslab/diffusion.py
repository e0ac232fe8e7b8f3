"""Variance-preserving diffusion schedule and the elementary chain operations.

Conventions used throughout the package:

  * timesteps are 1-based: t in {1, ..., T} indexes the noisy states,
    t = 0 is the clean data,
  * schedule arrays have length T + 1 with index 0 holding the sentinel
    values beta_0 = 0, alpha_0 = 1, alpha_bar_0 = 1, so that
    ``alpha_bar[t - 1]`` is always valid inside a reverse sweep,
  * the forward marginal is x_t = sqrt(alpha_bar_t) x_0
    + sqrt(1 - alpha_bar_t) eps with eps ~ N(0, I).

All arrays are float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseSchedule",
    "make_linear_schedule",
    "forward_noise",
    "estimate_x0",
    "posterior_mean",
    "posterior_sigma",
    "posterior_step_unguided",
    "posterior_step_from_x0",
]


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step variances of a discrete variance-preserving chain.

    ``beta``, ``alpha`` and ``alpha_bar`` all have length ``T + 1``;
    index 0 is a sentinel (beta 0, alpha 1, alpha_bar 1) so the
    t = 1 reverse step can read ``alpha_bar[0]`` without branching.
    """

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @classmethod
    def from_betas(cls, betas: np.ndarray) -> "NoiseSchedule":
        """Build a schedule from per-step betas (length T, for t = 1..T)."""
        betas = np.asarray(betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size == 0:
            raise ValueError("betas must be a non-empty 1-d array")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ValueError("betas must lie strictly inside (0, 1)")
        T = int(betas.size)
        beta = np.concatenate(([0.0], betas))
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        return cls(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar)

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError("schedule needs at least one step")
        for name in ("beta", "alpha", "alpha_bar"):
            arr = getattr(self, name)
            if arr.shape != (self.T + 1,):
                raise ValueError(f"{name} must have length T + 1")
        if self.beta[0] != 0.0 or self.alpha_bar[0] != 1.0:
            raise ValueError("index 0 must hold the sentinel beta=0, alpha_bar=1")
        if np.any(np.diff(self.alpha_bar) >= 0.0):
            raise ValueError("alpha_bar must be strictly decreasing")

    def sigma2(self, t: int) -> float:
        """Posterior variance sigma_t^2 = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t.

        Zero at t = 1 because alpha_bar_0 = 1: the final reverse step is
        deterministic.
        """
        self._check_t(t)
        return float(
            (1.0 - self.alpha_bar[t - 1]) / (1.0 - self.alpha_bar[t]) * self.beta[t]
        )

    def _check_t(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise ValueError(f"timestep {t} outside 1..{self.T}")


def make_linear_schedule(T: int = 150, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linearly spaced betas from beta_start to beta_end inclusive.

    With the defaults (T = 150) the terminal alpha_bar is about 0.22, i.e.
    the chain does *not* end at pure noise; samplers that start from x_T
    still see a strong imprint of their initialisation.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    if T == 1:
        betas = np.array([beta_start])
    else:
        betas = np.linspace(beta_start, beta_end, T)
    return NoiseSchedule.from_betas(betas)


def forward_noise(x0: np.ndarray, t: int, sched: NoiseSchedule, eps: np.ndarray) -> np.ndarray:
    """Noise clean data to level t: sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    sched._check_t(t)
    ab = sched.alpha_bar[t]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def estimate_x0(x_t: np.ndarray, eps_pred: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Invert the forward marginal around a noise estimate.

    x0_hat = (x_t - sqrt(1 - ab_t) eps_pred) / sqrt(ab_t)
    """
    sched._check_t(t)
    ab = sched.alpha_bar[t]
    return (x_t - np.sqrt(1.0 - ab) * eps_pred) / np.sqrt(ab)


def posterior_mean(x_t: np.ndarray, eps_pred: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Ancestral reverse mean mu_t = (x_t - beta_t / sqrt(1 - ab_t) eps_pred) / sqrt(alpha_t)."""
    sched._check_t(t)
    b = sched.beta[t]
    ab = sched.alpha_bar[t]
    return (x_t - b / np.sqrt(1.0 - ab) * eps_pred) / np.sqrt(sched.alpha[t])


def posterior_sigma(sched: NoiseSchedule, t: int) -> float:
    """Ancestral reverse standard deviation sigma_t (zero at t = 1)."""
    return float(np.sqrt(sched.sigma2(t)))


def posterior_step_unguided(
    x_t: np.ndarray, eps_pred: np.ndarray, t: int, sched: NoiseSchedule, noise: np.ndarray
) -> np.ndarray:
    """One plain ancestral step x_{t-1} = mu_t + sigma_t * noise.

    ``noise`` must be supplied by the caller (N(0, I) draw) so that
    samplers control their consumption of the random stream; it is
    multiplied by sigma_1 = 0 at the final step.
    """
    return posterior_mean(x_t, eps_pred, t, sched) + posterior_sigma(sched, t) * noise


def posterior_step_from_x0(
    x_t: np.ndarray, x0: np.ndarray, t: int, sched: NoiseSchedule, noise: np.ndarray
) -> np.ndarray:
    """Ancestral step expressed through a clean estimate instead of eps.

    mu_t = sqrt(ab_{t-1}) beta_t / (1 - ab_t) * x0
         + sqrt(alpha_t) (1 - ab_{t-1}) / (1 - ab_t) * x_t

    Algebraically identical to :func:`posterior_step_unguided` when
    ``x0 = estimate_x0(x_t, eps_pred, t)``, but lets a sampler replace the
    clean estimate (e.g. with a data-consistent projection) before
    stepping.  At t = 1 the output is exactly ``x0``.
    """
    sched._check_t(t)
    ab_t = sched.alpha_bar[t]
    ab_prev = sched.alpha_bar[t - 1]
    b = sched.beta[t]
    coef_x0 = np.sqrt(ab_prev) * b / (1.0 - ab_t)
    coef_xt = np.sqrt(sched.alpha[t]) * (1.0 - ab_prev) / (1.0 - ab_t)
    return coef_x0 * x0 + coef_xt * x_t + posterior_sigma(sched, t) * noise
