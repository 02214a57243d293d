"""Counter-based random number streams.

Every stochastic routine in this package takes an explicit seed and derives
its generator here.  Philox is counter-based, so streams keyed by
``(seed, stream ids...)`` are independent and reproducible without any
global state, and per-trial streams can be split off cheaply.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_MIX = 0x9E3779B97F4A7C15


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Generator for the stream identified by ``(seed, *stream)``."""
    h = 0
    for s in stream:
        h = ((h ^ (int(s) & _MASK64)) * _MIX) & _MASK64
    key = np.array([int(seed) & _MASK64, h], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
