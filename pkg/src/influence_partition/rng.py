"""Deterministic random-stream derivation.

Every stochastic component takes a 64-bit master seed and derives
independent substreams through SeedSequence spawn keys, so results are
reproducible and independent of evaluation order.
"""
from __future__ import annotations

import numpy as np

# Subsystem tags used as the first spawn-key component. Keeping them in one
# place prevents accidental stream collisions between modules.
TAG_IC_EVAL = 1
TAG_LT_EVAL = 2
TAG_SIM = 3
TAG_UPPER_GRAD = 4
TAG_LOWER_GRAD = 5
TAG_ROUND = 6
TAG_GREEDY = 7
TAG_SPLIT = 8
TAG_MERGE = 9
TAG_RANDOM_PART = 10
TAG_PIPAGE = 11
TAG_EXPERIMENT = 12
TAG_VALUE_EST = 13


def derive(seed: int, *key: int) -> np.random.Generator:
    """Generator for substream `key` of `seed`; same arguments, same stream."""
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=tuple(int(k) for k in key))))


def as_generator(rng: int | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return derive(int(rng))


def child_seed(seed: int, *key: int) -> int:
    """A 63-bit seed for substream `key`, for components that take plain seeds."""
    return int(derive(seed, *key).integers(0, 2**63))
