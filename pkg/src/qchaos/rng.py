"""Deterministic pseudo-random stream shared by all stochastic components.

Counter-based Philox4x32-10: draw k of a stream is a pure function of
(seed, k), computed with exact 32/64-bit integer arithmetic, so a stream's
entire output is fixed by the 64-bit seed alone, on every platform, and
blocks of draws are produced with vectorized uint64 arithmetic.  Every
experiment records its seed; re-running with the same seed reproduces all
outputs bit for bit.
"""

from __future__ import annotations

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_MUL0 = np.uint64(0xD2511F53)
_MUL1 = np.uint64(0xCD9E8D57)
_KEY_WEYL0 = np.uint64(0x9E3779B9)
_KEY_WEYL1 = np.uint64(0xBB67AE85)
_U53_INV = float(2.0**-53)
_SPAWN_BASE = np.uint64(1) << np.uint64(63)


def _philox(counters: np.ndarray, seed: int) -> np.ndarray:
    """One 64-bit word per counter: ten Philox4x32 rounds, output o1<<32|o0.

    All lane values stay below 2**32 inside uint64 arrays, so products and
    xors are exact; no wraparound behavior is relied on.
    """
    c0 = counters & _MASK32
    c1 = counters >> np.uint64(32)
    c2 = np.zeros_like(counters)
    c3 = np.zeros_like(counters)
    k0 = np.uint64(seed) & _MASK32
    k1 = np.uint64(seed) >> np.uint64(32)
    for _ in range(10):
        p0 = _MUL0 * c0
        p1 = _MUL1 * c2
        c0, c1, c2, c3 = (
            (p1 >> np.uint64(32)) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> np.uint64(32)) ^ c3 ^ k1,
            p0 & _MASK32,
        )
        k0 = (k0 + _KEY_WEYL0) & _MASK32
        k1 = (k1 + _KEY_WEYL1) & _MASK32
    return (c1 << np.uint64(32)) | c0


class Stream:
    """Philox stream; (seed, number of draws so far) is the full state."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.count = 0

    def _raw_block(self, size: int) -> np.ndarray:
        lo = self.count
        counters = np.arange(lo, lo + size, dtype=np.uint64)
        self.count += size
        return _philox(counters, self.seed)

    def next_u64(self) -> int:
        return int(self._raw_block(1)[0])

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """One double, uniform in [lo, hi), from the top 53 bits of a draw."""
        u = float(self._raw_block(1)[0] >> np.uint64(11)) * _U53_INV
        return lo + (hi - lo) * u

    def uniform_block(self, size: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        u = (self._raw_block(size) >> np.uint64(11)).astype(np.float64) * _U53_INV
        return lo + (hi - lo) * u

    def spawn(self, label: int) -> "Stream":
        """Independent child stream; spawn counters live in the upper half
        of the counter space, disjoint from ordinary draws."""
        counter = np.array([_SPAWN_BASE + np.uint64(label)], dtype=np.uint64)
        return Stream(int(_philox(counter, self.seed)[0]))
