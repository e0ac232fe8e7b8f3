"""Synthetic degradation pipeline: blur, downsample, noise, JPEG, clamp.

A clean image in [0, 1] is degraded as

    lq = clamp( JPEG_q( avgpool_s( blur_sigma(gt) ) + n_delta ) )

with n_delta white Gaussian noise of standard deviation delta / 255.  The
JPEG stage models only the quantisation distortion of the luminance
channel: per 8x8 block, orthonormal DCT coefficients of the level-shifted
image are divided by the quality-scaled standard table, rounded, and
restored; no entropy coding is involved (it is lossless).

Every random choice flows through the counter-based stream keyed by the
spec's seed, so (gt, spec) determines the output bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .guidance import blur_kernel_size
from .operators import CompositeOperator, avgpool_op, gaussian_blur_op
from .rng import CounterRng

__all__ = [
    "DegradationSpec",
    "ALLOWED_SCALES",
    "sample_spec",
    "degradation_operator",
    "synthesize_lq",
    "jpeg_quantize",
    "BASE_QUANT_TABLE",
]

ALLOWED_SCALES = (4, 8, 16)

# Standard luminance quantisation table (quality 50), row major.
BASE_QUANT_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class DegradationSpec:
    """Parameters of one degradation draw.

    sigma: blur width; s: downsampling factor; delta: noise level on the
    0..255 scale; q: JPEG quality in 1..100; seed: key of the noise
    stream.
    """

    sigma: float
    s: int
    delta: float
    q: int
    seed: int

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.s < 1:
            raise ValueError("scale must be >= 1")
        if self.delta < 0.0:
            raise ValueError("delta must be >= 0")
        if not 1 <= self.q <= 100:
            raise ValueError("quality must lie in 1..100")


def sample_spec(rng: CounterRng, s: int) -> DegradationSpec:
    """Draw sigma ~ U[0.2, 10], delta ~ U[0, 15], q ~ U{60..100}.

    The scale is caller-chosen from the benchmark set; the per-image noise
    seed is the next raw word of the stream.
    """
    if s not in ALLOWED_SCALES:
        raise ValueError(f"scale {s} not in benchmark set {ALLOWED_SCALES}")
    sigma = float(0.2 + 9.8 * rng.uniforms(1)[0])
    delta = float(15.0 * rng.uniforms(1)[0])
    q = rng.integer(60, 100)
    seed = int(rng.words(1)[0])
    return DegradationSpec(sigma=sigma, s=s, delta=delta, q=q, seed=seed)


def quant_table(q: int) -> np.ndarray:
    """Quality-scaled quantisation table (libjpeg convention).

    scale = 5000 / q below 50, else 200 - 2q; entries floor((base * scale
    + 50) / 100), clamped to at least 1.  Quality 100 gives the all-ones
    table (lossless up to rounding of the DCT coefficients).
    """
    if not 1 <= q <= 100:
        raise ValueError("quality must lie in 1..100")
    scale = 5000.0 / q if q < 50 else 200.0 - 2.0 * q
    tbl = np.floor((BASE_QUANT_TABLE * scale + 50.0) / 100.0)
    return np.maximum(tbl, 1.0)


def jpeg_quantize(img: np.ndarray, q: int) -> np.ndarray:
    """Quantisation distortion of one JPEG round trip on a [0, 1] image.

    Blocks are 8x8 on the level-shifted 0..255 scale; partial border
    blocks are completed by symmetric padding and cropped afterwards (the
    round trip is exactly idempotent only when both sides are multiples
    of 8).
    """
    if img.ndim != 2:
        raise ValueError("need a 2-d image")
    tbl = quant_table(q)
    h, w = img.shape
    ph = (-h) % 8
    pw = (-w) % 8
    work = img * 255.0 - 128.0
    if ph or pw:
        work = np.pad(work, ((0, ph), (0, pw)), mode="symmetric")
    hb, wb = work.shape[0] // 8, work.shape[1] // 8
    blocks = work.reshape(hb, 8, wb, 8)
    coef = dctn(blocks, axes=(1, 3), norm="ortho")
    coef = np.round(coef / tbl[None, :, None, :]) * tbl[None, :, None, :]
    back = idctn(coef, axes=(1, 3), norm="ortho").reshape(hb * 8, wb * 8)
    return (back[:h, :w] + 128.0) / 255.0


def degradation_operator(h: int, w: int, spec: DegradationSpec) -> CompositeOperator:
    """The linear (pre-noise, pre-JPEG) part: blur then average pooling."""
    if h % spec.s or w % spec.s:
        raise ValueError(f"image {h}x{w} not divisible by scale {spec.s}")
    k = blur_kernel_size(spec.sigma, min(h, w))
    return CompositeOperator([gaussian_blur_op(h, w, spec.sigma, k), avgpool_op(h, w, spec.s)])


def synthesize_lq(gt: np.ndarray, spec: DegradationSpec) -> np.ndarray:
    """Degrade one clean [0, 1] image per the given parameters; bit-deterministic."""
    if gt.ndim != 2:
        raise ValueError("need a 2-d image")
    h, w = gt.shape
    x = degradation_operator(h, w, spec).apply(gt)
    noise = CounterRng(spec.seed).normals(x.size).reshape(x.shape)
    x = x + (spec.delta / 255.0) * noise
    x = jpeg_quantize(x, spec.q)
    return np.clip(x, 0.0, 1.0)
