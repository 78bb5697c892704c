"""Named random streams derived from one master seed.

Every stochastic component draws from its own stream, keyed by the
master seed plus a stream id (plus optional sub-keys such as the epoch
or fold index). Changing one component's draws never perturbs another,
and any draw is reproducible in isolation.
"""

from __future__ import annotations

import numpy as np

STREAM_INIT = 1
STREAM_SPLITS = 2
STREAM_AUG = 3
STREAM_DROPOUT = 4
STREAM_SHUFFLE = 5
STREAM_BENCH = 6


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the (seed, *keys) stream."""
    return np.random.default_rng([int(seed), *map(int, keys)])
