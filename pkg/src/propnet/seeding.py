"""Seed handling for reproducible experiments.

Every random stream is derived from a single 64-bit master seed.  The
substream for a tuple of non-negative integers ``path`` is::

    SeedSequence(entropy=master, spawn_key=path) -> PCG64

so ``substream(s, 3, 1)`` is always the same generator, and changing the
number of graphs or trials in a sweep never perturbs the streams of the
points that were already there.
"""

from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1


def substream(master: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master) & MASK64, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(master: int, *path: int) -> int:
    """A 64-bit integer seed for the substream at ``path``."""
    ss = np.random.SeedSequence(entropy=int(master) & MASK64, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(0 if seed is None else int(seed))


def env_seed(default: int | None) -> int | None:
    """``PROPNET_SEED`` overrides ``default`` when set."""
    value = os.environ.get("PROPNET_SEED")
    if value is None or value.strip() == "":
        return default
    return int(value, 0)
