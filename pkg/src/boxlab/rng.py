"""Portable seeded random numbers.

A 64-bit linear congruential generator (Knuth's MMIX constants) seeded
directly with the user seed.  Uniform doubles take the top 53 bits of each
new state, so any language reproduces the same box streams.
"""

from __future__ import annotations

import math
from typing import Iterator

from .geometry import Box

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1
DEFAULT_SEED = 42

CENTER_RANGE = (-5.0, 5.0)
EXTENT_RANGE = (0.1, 4.0)


class Lcg64:
    def __init__(self, seed: int = DEFAULT_SEED):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state * MULTIPLIER + INCREMENT) & _MASK
        return self.state

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def log_uniform(self, lo: float, hi: float) -> float:
        return math.exp(self.uniform(math.log(lo), math.log(hi)))

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + int(self.random() * (hi - lo + 1))


def sample_box(rng: Lcg64) -> Box:
    """Center uniform in [-5, 5]^2, extents log-uniform in [0.1, 4]; drawn cx, cy, w, h."""
    cx = rng.uniform(*CENTER_RANGE)
    cy = rng.uniform(*CENTER_RANGE)
    w = rng.log_uniform(*EXTENT_RANGE)
    h = rng.log_uniform(*EXTENT_RANGE)
    return Box(cx, cy, w, h)


def box_pairs(seed: int = DEFAULT_SEED) -> Iterator[tuple[Box, Box]]:
    """Endless stream of ``(pred, target)`` pairs."""
    rng = Lcg64(seed)
    while True:
        pred = sample_box(rng)
        yield pred, sample_box(rng)
