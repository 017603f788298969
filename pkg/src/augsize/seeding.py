"""Derived random streams.

Every stochastic stage draws from a generator keyed by
``(master seed, stage tag, *indices)`` so no RNG state is shared between stages.
"""
import zlib

import numpy as np


def _tag_key(tag):
    return zlib.crc32(tag.encode("utf-8"))


def derive_seed(seed, tag, *indices):
    """Return a 64-bit integer seed for ``(seed, tag, *indices)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, _tag_key(tag), *map(int, indices)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(seed, tag, *indices):
    return np.random.default_rng(derive_seed(seed, tag, *indices))
