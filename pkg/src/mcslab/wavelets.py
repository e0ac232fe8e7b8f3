"""Single-level orthonormal 2-d Haar analysis on even-sized grids.

Each disjoint 2x2 block [[a, b], [c, d]] maps to four coefficients

    low = (a + b + c + d) / 2        (block average, scaled)
    lh  = (a - b + c - d) / 2        (horizontal difference)
    hl  = (a + b - c - d) / 2        (vertical difference)
    hh  = (a - b - c + d) / 2        (diagonal difference)

The transform is orthonormal: it preserves the Euclidean norm exactly and
its inverse equals its transpose, so gradients chain through it by simply
reconstructing the coefficient-space gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WaveletBands", "haar_decompose", "haar_reconstruct", "detail_energy"]


@dataclass
class WaveletBands:
    """Coefficients of one analysis level.

    ``low`` has shape (h/2, w/2); ``high`` stacks the three detail bands
    (lh, hl, hh) along axis 0 with shape (3, h/2, w/2).
    """

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        if self.high.shape != (3,) + self.low.shape:
            raise ValueError("high bands must stack 3 arrays shaped like low")


def _check_even(img: np.ndarray) -> None:
    if img.ndim != 2 or img.shape[0] % 2 or img.shape[1] % 2:
        raise ValueError(f"need a 2-d array with even sides, got shape {img.shape}")


def haar_decompose(img: np.ndarray) -> WaveletBands:
    _check_even(img)
    a = img[0::2, 0::2]
    b = img[0::2, 1::2]
    c = img[1::2, 0::2]
    d = img[1::2, 1::2]
    low = (a + b + c + d) / 2.0
    lh = (a - b + c - d) / 2.0
    hl = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return WaveletBands(low=low, high=np.stack([lh, hl, hh]))


def haar_reconstruct(bands: WaveletBands) -> np.ndarray:
    low = bands.low
    lh, hl, hh = bands.high
    h2, w2 = low.shape
    out = np.empty((2 * h2, 2 * w2))
    out[0::2, 0::2] = (low + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (low - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (low + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (low - lh - hl + hh) / 2.0
    return out


def detail_energy(img: np.ndarray, levels: int = 1) -> float:
    """Squared norm of all detail coefficients down to ``levels`` analyses.

    Each level consumes the previous level's low band; the low band of the
    deepest level is excluded.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    total = 0.0
    cur = img
    for _ in range(levels):
        bands = haar_decompose(cur)
        total += float(np.sum(bands.high**2))
        cur = bands.low
    return total
