"""Counter-based random streams keyed by ``(seed, *keys)``.

Every replication block draws from its own Philox stream, so results do not
depend on how blocks are scheduled across workers.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("stream keys must be nonnegative")
        return int(k)
    return zlib.crc32(str(k).encode())


def stream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``seed`` and a tuple of integer or string keys."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return stream(0 if rng is None else int(rng))
    raise TypeError(f"cannot make a generator from {rng!r}")
