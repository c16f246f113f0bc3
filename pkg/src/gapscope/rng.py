"""Deterministic random streams.

Every stream is a Philox generator keyed by a SeedSequence built from the run
seed plus a path of integer or string keys, so draws never depend on the order
in which rows, trajectories, or nodes are processed.
"""

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError(f"stream keys must be non-negative, got {k}")
        return int(k)
    return zlib.crc32(str(k).encode())


def seed_sequence(seed, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_key(seed), *(_key(k) for k in keys)])


def generator(seed, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *keys)))


def derive_seed(seed, *keys) -> int:
    """A 63-bit integer seed for a named sub-task, e.g. one sweep point."""
    return int(seed_sequence(seed, *keys).generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))
