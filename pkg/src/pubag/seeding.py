"""Splittable seeding helpers.

Every stochastic operation in the package takes an explicit integer seed and
derives child streams through ``numpy.random.SeedSequence`` spawn keys, so a
run is fully determined by its root seed and the derivation path, regardless
of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np


def derive(seed: int, *path: int) -> np.random.SeedSequence:
    """Child seed sequence for ``path`` under ``seed``.

    Distinct paths give statistically independent streams; the same path
    always gives the same stream.
    """
    return np.random.SeedSequence(seed, spawn_key=tuple(int(p) for p in path))


def generator(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the derived stream."""
    return np.random.Generator(np.random.Philox(derive(seed, *path)))


def kernel_seed(seed: int, *path: int) -> np.uint64:
    """64-bit state word for the in-kernel shuffle PRNG."""
    return derive(seed, *path).generate_state(1, np.uint64)[0]
