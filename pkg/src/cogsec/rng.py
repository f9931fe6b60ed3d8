"""Seeded random streams.

Every random draw in the package comes from a Philox (counter-based)
generator keyed by ``(master seed, label, index)``.  The label is hashed with
CRC32 so stream identity does not depend on ``PYTHONHASHSEED``, which keeps
serial and parallel runs of the same scenario bit-identical.
"""

from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def stream(seed: int, label: str = "", index: int = 0) -> np.random.Generator:
    """Return the generator for task ``index`` of stream ``label``."""
    if seed < 0:
        raise ValueError("seed must be a non-negative 64-bit integer")
    ss = np.random.SeedSequence(entropy=int(seed) & SEED_MASK,
                                spawn_key=(label_key(label), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an integer seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return stream(0)
    return stream(int(rng))
