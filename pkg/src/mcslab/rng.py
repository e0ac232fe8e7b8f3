"""Counter-based random stream for the degradation pipeline.

Degraded benchmark inputs must be byte-identical across platforms and
library versions, so this stream avoids any library generator state: word
i of seed s is the SplitMix64 finalizer applied to s + (i+1) * GAMMA, and
floats/normals are fixed functions of those words.

  * uniforms: take the top 53 bits, scale by 2^-53 -> [0, 1)
  * normals: Box-Muller on word pairs (u1 from the first word shifted
    into (0, 1], u2 from the second), emitting the cosine then the sine
    branch
  * integers: floor(u * span) over an inclusive range

Library code elsewhere uses numpy generators; this class is only for
artifacts whose bytes are part of the contract.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CounterRng"]

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class CounterRng:
    """SplitMix64 word stream addressed by an advancing counter."""

    def __init__(self, seed: int):
        self.seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self.counter = 0

    def words(self, n: int) -> np.ndarray:
        """Next n raw 64-bit words."""
        if n < 0:
            raise ValueError("n must be >= 0")
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix(self.seed + idx * _GAMMA)

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1)."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller on consecutive word pairs."""
        m = (n + 1) // 2
        w = self.words(2 * m)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1).
        u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integer(self, lo: int, hi: int) -> int:
        """One integer uniform on the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError("empty range")
        u = self.uniforms(1)[0]
        return lo + int(np.floor(u * (hi - lo + 1)))
