"""Deterministic, splittable random number generation.

Every stochastic routine in the package derives its generator through
:func:`make_rng`, a pure function of a master seed and an integer key path.
Streams for cell ``(i, k)`` of a Monte Carlo sweep are therefore identical
no matter how the work is scheduled across processes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng"]


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Return a Philox generator for stream ``key`` under ``seed``.

    ``make_rng(seed)`` is the root stream; ``make_rng(seed, i, k)`` is the
    stream of sub-task ``(i, k)``.  Distinct key paths yield statistically
    independent streams.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
