"""Seeded generator construction.

Every random component derives its generator from ``(seed, tag, *extra)`` so
one integer seed can be shared by data, features and sampling without their
streams being correlated.
"""

import numpy as np

DATA = 1
FEATURES = 2
SAMPLING = 3
SPLIT = 4


def generator(seed: int, tag: int, *extra: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), tag, *map(int, extra)])))
