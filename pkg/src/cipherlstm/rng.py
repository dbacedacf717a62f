"""Counter-based random streams.

Every random draw in the package comes from Philox4x64-10 (Random123), keyed
by the run seed. A substream is selected by fixing the two high counter words
to ``(index, stream)``; its raw 64-bit outputs are then consumed in order.
Letters and small integers are derived from raw words by multiply-shift on
the top 32 bits, ``((u >> 32) * n) >> 32``, so the mapping does not depend on
numpy's Generator algorithms and reproduces on any platform.
"""

from __future__ import annotations

import numpy as np

# stream tags for the counter's top word
TRAIN = 0
EVAL = 1
INIT = 2

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int, stream: int) -> np.random.Philox:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Philox(key=seed & ((1 << 128) - 1), counter=[0, 0, index & _MASK64, stream])


class Stream:
    """Sequential reader over one Philox substream."""

    def __init__(self, seed: int, index: int, stream: int):
        self._bg = substream(seed, index, stream)

    def raw(self, k: int) -> np.ndarray:
        return self._bg.random_raw(k)

    def below(self, n: int, k: int) -> np.ndarray:
        """k integers uniform on [0, n), n < 2**32."""
        u = self.raw(k)
        return ((u >> np.uint64(32)) * np.uint64(n)) >> np.uint64(32)

    def uniform(self, k: int) -> np.ndarray:
        """k doubles uniform on [0, 1) with 53-bit resolution."""
        return (self.raw(k) >> np.uint64(11)).astype(np.float64) * 2.0**-53
