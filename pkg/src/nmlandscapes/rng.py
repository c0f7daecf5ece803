"""Seeded random streams.

Every landscape, replicate and GA run draws from its own substream derived
from ``(master_seed, *keys)`` so results do not depend on execution order.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``seed`` and a path of integer keys."""
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seeds and substream keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed derived from ``(seed, *keys)``.

    Used where a plain integer has to be recorded (landscape documents, CSV rows).
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0]) >> 1
