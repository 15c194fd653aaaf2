"""SplitMix64 pseudo-random generator and derived draws.

All randomness in this package (synthetic rendering noise, dataset
shuffling, geometry jitter) flows through SplitMix64 so that outputs are
bit-identical across runs, platforms, and reimplementations. The state
update and output mix follow Vigna's reference splitmix64.c; the first
outputs for seed 0 are 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, ...

Derived draws are pinned here once and for all:

* uniform in [0, 1): (next_u64 >> 11) * 2**-53
* integer below n:   next_u64 % n  (modulo; bias is irrelevant at our n)
* standard normal:   Box-Muller cosine branch, two uniforms per sample,
  with u1 in (0, 1] via ((next_u64 >> 11) + 1) * 2**-53 so log(u1) is
  finite, and u2 in [0, 1). Draws are consumed strictly in order.
"""

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53


class SplitMix64:
    """Sequential SplitMix64 stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform draw in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_gaussian(self) -> float:
        """Standard normal via the pinned Box-Muller cosine branch."""
        u1 = ((self.next_u64() >> 11) + 1) * _INV53
        u2 = (self.next_u64() >> 11) * _INV53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def gaussian_field(seed: int, count: int) -> np.ndarray:
    """Vectorized equivalent of `count` sequential next_gaussian() draws.

    SplitMix64's k-th state is seed + k * GOLDEN mod 2**64, so the whole
    stream can be computed with numpy uint64 arithmetic; equality with the
    sequential form is asserted in the test suite.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.zeros(0)
    k = np.arange(1, 2 * count + 1, dtype=np.uint64)
    s = np.uint64(seed & _MASK) + k * np.uint64(_GOLDEN)
    z = (s ^ (s >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    mant = (z >> np.uint64(11)).astype(np.float64)
    u1 = (mant[0::2] + 1.0) * _INV53
    u2 = mant[1::2] * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
