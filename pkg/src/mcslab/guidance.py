"""Measurement-guided ancestral samplers.

The central sampler alternates two guidance losses over the reverse sweep:

  * an early *forward* phase that pulls the high-frequency wavelet content
    of the running clean estimate toward that of a coarse restoration
    ``y0`` (structure formation),
  * a late *reverse* phase that penalises the estimate only through the
    range-space projection of the degradation operator, anchoring block
    content to ``y0`` while leaving the null space free (diversity).

The phase switch is a single timestep threshold.  Two update rules are
provided: ``alg1`` perturbs the ancestral mean by the scaled gradient and
keeps the ancestral variance; ``reanchor`` rebuilds the state from noised
``y0`` every step and applies the gradient directly.  Baseline samplers
(data-fidelity gradient guidance and null-space projection replacement)
share the same denoiser protocol ``denoise(x_t, t, cond) -> eps``.

All samplers consume their generator in a fixed documented order, so runs
are bit-reproducible given (inputs, config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import (
    NoiseSchedule,
    estimate_x0,
    posterior_mean,
    posterior_sigma,
    posterior_step_from_x0,
)
from .operators import LinearOperator, gaussian_blur_op
from .wavelets import WaveletBands, haar_decompose, haar_reconstruct

__all__ = [
    "FORWARD",
    "REVERSE",
    "GuidanceConfig",
    "TrajectoryStep",
    "Trajectory",
    "NumericalAbort",
    "select_measurement",
    "forward_loss_grad",
    "reverse_loss_grad",
    "fidelity_loss_grad",
    "noise_blend_init",
    "mcs_sample",
    "unguided_sample",
    "dps_sample",
    "ddnm_sample",
    "coarse_restore",
    "blur_kernel_size",
]

FORWARD = "forward"
REVERSE = "reverse"


class NumericalAbort(RuntimeError):
    """Non-finite value met during sampling (step size too large)."""

    def __init__(self, t: int, what: str):
        super().__init__(f"non-finite {what} at timestep {t}; reduce the guidance step size")
        self.t = t
        self.what = what


@dataclass
class GuidanceConfig:
    """Knobs of the guided sampler.

    ``weight_ratio`` multiplies the two step sizes, giving effective
    strengths eta_forward * w1 (forward phase) and eta_reverse * w2
    (reverse phase).  ``gradient_target`` chooses what the loss gradient
    is taken against: the clean estimate itself (``xhat``) or the chain
    state (``chain``, which rescales by 1/sqrt(alpha_bar_t)).
    ``t_start_fraction`` sets the noise-blend initialisation level as a
    fraction of T.
    """

    eta_forward: float = 1.0
    eta_reverse: float = 1.0
    boundary: float = 0.6
    weight_ratio: tuple[float, float] = (1.0, 1.0)
    update_rule: str = "alg1"
    gradient_target: str = "xhat"
    t_start_fraction: float = 1.0
    wavelet_levels: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.boundary < 1.0:
            raise ValueError("boundary must lie in (0, 1)")
        for name in ("eta_forward", "eta_reverse"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0")
        w1, w2 = self.weight_ratio
        if w1 <= 0.0 or w2 <= 0.0:
            raise ValueError("weight_ratio entries must be positive")
        self.weight_ratio = (float(w1), float(w2))
        if self.update_rule not in ("alg1", "reanchor"):
            raise ValueError("update_rule must be 'alg1' or 'reanchor'")
        if self.gradient_target not in ("xhat", "chain"):
            raise ValueError("gradient_target must be 'xhat' or 'chain'")
        if not 0.0 < self.t_start_fraction <= 1.0:
            raise ValueError("t_start_fraction must lie in (0, 1]")
        if self.wavelet_levels < 1:
            raise ValueError("wavelet_levels must be >= 1")


@dataclass
class TrajectoryStep:
    t: int
    measurement: str | None
    loss: float
    grad_norm: float
    x0_snapshot: np.ndarray | None = None


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)

    def snapshots(self) -> list[TrajectoryStep]:
        return [s for s in self.steps if s.x0_snapshot is not None]

    def validate(self) -> None:
        ts = [s.t for s in self.steps]
        if any(nxt >= prev for nxt, prev in zip(ts[1:], ts)):
            raise ValueError("trajectory steps must be strictly decreasing in t")


def select_measurement(t: int, T: int, boundary: float) -> str:
    """Phase of step t: forward iff t >= ceil(boundary * T), else reverse."""
    if not 1 <= t <= T:
        raise ValueError(f"timestep {t} outside 1..{T}")
    return FORWARD if t >= int(np.ceil(boundary * T)) else REVERSE


def forward_loss_grad(y0: np.ndarray, xhat: np.ndarray, levels: int = 1):
    """Squared distance between the detail (high-frequency) bands.

    loss = sum over analysis levels of ||detail(xhat) - detail(y0)||^2;
    the gradient w.r.t. xhat reconstructs 2 * (detail difference) with a
    zeroed low band, which is exact because the transform is orthonormal.
    """
    if y0.shape != xhat.shape:
        raise ValueError(f"shape mismatch {y0.shape} vs {xhat.shape}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    by = haar_decompose(y0)
    bx = haar_decompose(xhat)
    diff = bx.high - by.high
    loss = float(np.sum(diff**2))
    if levels > 1:
        sub_loss, sub_grad = forward_loss_grad(by.low, bx.low, levels - 1)
        loss += sub_loss
    else:
        sub_grad = np.zeros_like(bx.low)
    grad = haar_reconstruct(WaveletBands(low=sub_grad, high=2.0 * diff))
    return loss, grad


def reverse_loss_grad(y0: np.ndarray, xhat: np.ndarray, A: LinearOperator):
    """Projection-space anchor loss ||y0 - P xhat||^2 with P = A^+ A.

    The estimate enters only through its range-space component, so the
    gradient is 2 (P xhat - P y0): null-space content is unconstrained.
    """
    if y0.shape != xhat.shape:
        raise ValueError(f"shape mismatch {y0.shape} vs {xhat.shape}")
    if A.in_shape != xhat.shape:
        raise ValueError(f"operator domain {A.in_shape} does not match image {xhat.shape}")
    px = A.project(xhat)
    loss = float(np.sum((y0 - px) ** 2))
    grad = 2.0 * (px - A.project(y0))
    return loss, grad


def fidelity_loss_grad(y: np.ndarray, xhat: np.ndarray, A: LinearOperator):
    """Measurement-space data fidelity ||y - A xhat||^2 and its gradient.

    The gradient 2 A^T (A xhat - y) is exact because A is linear; this is
    the correction used by the data-fidelity baseline sampler.
    """
    if A.out_shape != y.shape:
        raise ValueError(f"measurement shape {y.shape} does not match operator {A.out_shape}")
    if A.in_shape != xhat.shape:
        raise ValueError(f"operator domain {A.in_shape} does not match image {xhat.shape}")
    r = A.apply(xhat) - y
    loss = float(np.sum(r**2))
    return loss, 2.0 * A.apply_transpose(r)


def noise_blend_init(
    y0: np.ndarray, t_start: int, sched: NoiseSchedule, rng: np.random.Generator, eps=None
) -> np.ndarray:
    """Start state sqrt(ab_t) y0 + sqrt(1 - ab_t) eps at level t_start.

    ``eps`` overrides the N(0, I) draw (test hook); by default one draw of
    y0's shape is consumed from ``rng``.
    """
    sched._check_t(t_start)
    if eps is None:
        eps = rng.standard_normal(y0.shape)
    ab = sched.alpha_bar[t_start]
    return np.sqrt(ab) * y0 + np.sqrt(1.0 - ab) * eps


def _start_step(cfg: GuidanceConfig, T: int) -> int:
    return max(1, int(np.floor(cfg.t_start_fraction * T)))


def _check_finite(t: int, what: str, *arrays) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalAbort(t, what)


def _record(steps, t, tag, loss, gnorm, xhat, stride) -> None:
    snap = xhat.copy() if (t % stride == 0 or t == 1) else None
    steps.append(TrajectoryStep(t=t, measurement=tag, loss=loss, grad_norm=gnorm, x0_snapshot=snap))


def mcs_sample(
    denoiser,
    y0: np.ndarray,
    A: LinearOperator,
    cond,
    cfg: GuidanceConfig,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    snapshot_stride: int = 1,
):
    """Measurement-constrained ancestral sampling.

    Initialises by noise-blending ``y0``, then sweeps t down to 1:
    estimate the clean image from the conditioned denoiser, evaluate the
    phase-selected guidance loss, and step with the configured rule.
    Returns the final clean estimate and the step trajectory.

    Generator consumption per step: one state-shaped normal draw under
    ``alg1``, two under ``reanchor``; plus the single initialisation draw.
    """
    T = sched.T
    w1, w2 = cfg.weight_ratio
    t0 = _start_step(cfg, T)
    x = noise_blend_init(y0, t0, sched, rng)
    steps: list[TrajectoryStep] = []
    for t in range(t0, 0, -1):
        eps = denoiser(x, t, cond)
        xhat = estimate_x0(x, eps, t, sched)
        _check_finite(t, "clean estimate", xhat)
        tag = select_measurement(t, T, cfg.boundary)
        if tag == FORWARD:
            loss, g = forward_loss_grad(y0, xhat, cfg.wavelet_levels)
            eta = cfg.eta_forward * w1
        else:
            loss, g = reverse_loss_grad(y0, xhat, A)
            eta = cfg.eta_reverse * w2
        if cfg.gradient_target == "chain":
            g = g / np.sqrt(sched.alpha_bar[t])
        gnorm = float(np.linalg.norm(g))
        sigma = posterior_sigma(sched, t)
        if cfg.update_rule == "alg1":
            mu = posterior_mean(x, eps, t, sched)
            z = rng.standard_normal(x.shape)
            x = mu - sigma**2 * eta * g + sigma * z
        else:
            e1 = rng.standard_normal(x.shape)
            e2 = rng.standard_normal(x.shape)
            ab = sched.alpha_bar[t]
            x = np.sqrt(ab) * y0 + np.sqrt(1.0 - ab) * e1 - eta * g + sigma * e2
        _check_finite(t, "state", x)
        _record(steps, t, tag, loss, gnorm, xhat, snapshot_stride)
    return x, Trajectory(steps=steps)


def unguided_sample(
    denoiser,
    y0: np.ndarray,
    cond,
    cfg: GuidanceConfig,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    snapshot_stride: int = 1,
):
    """Plain ancestral sampling from the noise-blend initialisation.

    Consumes the generator exactly like ``mcs_sample`` with rule ``alg1``,
    so a zero-guidance guided run reproduces it bit for bit under a shared
    seed.
    """
    T = sched.T
    t0 = _start_step(cfg, T)
    x = noise_blend_init(y0, t0, sched, rng)
    steps: list[TrajectoryStep] = []
    for t in range(t0, 0, -1):
        eps = denoiser(x, t, cond)
        xhat = estimate_x0(x, eps, t, sched)
        _check_finite(t, "clean estimate", xhat)
        mu = posterior_mean(x, eps, t, sched)
        z = rng.standard_normal(x.shape)
        x = mu + posterior_sigma(sched, t) * z
        _check_finite(t, "state", x)
        _record(steps, t, None, 0.0, 0.0, xhat, snapshot_stride)
    return x, Trajectory(steps=steps)


def dps_sample(
    denoiser,
    y: np.ndarray,
    A: LinearOperator,
    cfg: GuidanceConfig,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    cond=None,
) -> np.ndarray:
    """Data-fidelity gradient baseline.

    Starts from pure noise; each step subtracts
    lambda * grad ||y - A xhat||^2 from the ancestral mean, with
    lambda = eta_reverse * w2 and the gradient mapped per
    ``gradient_target``.
    """
    if A.out_shape != y.shape:
        raise ValueError(f"measurement shape {y.shape} does not match operator {A.out_shape}")
    T = sched.T
    lam = cfg.eta_reverse * cfg.weight_ratio[1]
    x = rng.standard_normal(A.in_shape)
    for t in range(T, 0, -1):
        eps = denoiser(x, t, cond)
        xhat = estimate_x0(x, eps, t, sched)
        _check_finite(t, "clean estimate", xhat)
        _, g = fidelity_loss_grad(y, xhat, A)
        if cfg.gradient_target == "chain":
            g = g / np.sqrt(sched.alpha_bar[t])
        mu = posterior_mean(x, eps, t, sched)
        z = rng.standard_normal(x.shape)
        x = mu - lam * g + posterior_sigma(sched, t) * z
        _check_finite(t, "state", x)
    return x


def ddnm_sample(
    denoiser,
    y: np.ndarray,
    A: LinearOperator,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    cond=None,
) -> np.ndarray:
    """Null-space projection baseline.

    Each step overwrites the range-space content of the clean estimate
    with the pseudo-inverse lift of the measurement,
    x0 <- A^+ y + (I - A^+ A) x0, then takes the standard ancestral step
    expressed through x0.  The final step returns the projected estimate
    itself, so noiseless measurements are reproduced exactly.
    """
    if A.out_shape != y.shape:
        raise ValueError(f"measurement shape {y.shape} does not match operator {A.out_shape}")
    T = sched.T
    lift = A.pseudo_apply(y)
    x = rng.standard_normal(A.in_shape)
    for t in range(T, 0, -1):
        eps = denoiser(x, t, cond)
        xhat = estimate_x0(x, eps, t, sched)
        _check_finite(t, "clean estimate", xhat)
        xhat = lift + xhat - A.project(xhat)
        z = rng.standard_normal(x.shape)
        x = posterior_step_from_x0(x, xhat, t, sched, z)
        _check_finite(t, "state", x)
    return x


def blur_kernel_size(sigma: float, max_extent: int) -> int:
    """Truncated-kernel size 2 ceil(3 sigma) + 1, capped at the image extent."""
    k = 2 * int(np.ceil(3.0 * sigma)) + 1
    if k > max_extent:
        k = max_extent if max_extent % 2 == 1 else max_extent - 1
    return max(k, 1)


def coarse_restore(y: np.ndarray, A_deg: LinearOperator, smooth_sigma: float = 0.0) -> np.ndarray:
    """Cheap restoration: pseudo-inverse lift plus optional Gaussian smoothing.

    With ``smooth_sigma = 0`` this is exactly the Moore-Penrose lift
    A_deg^+ y (block replication for average pooling).
    """
    if A_deg.out_shape != y.shape:
        raise ValueError(f"measurement shape {y.shape} does not match operator {A_deg.out_shape}")
    x = A_deg.pseudo_apply(y)
    if smooth_sigma > 0.0:
        h, w = A_deg.in_shape
        k = blur_kernel_size(smooth_sigma, min(h, w))
        x = gaussian_blur_op(h, w, smooth_sigma, k).apply(x)
    return x
