"""Seed splitting.

Every consumer of randomness asks for a named stream.  The stream's
generator is ``PCG64(SeedSequence(seed, spawn_key=(crc32(name),)))``, so
streams are independent of each other and of the order they are requested in.
"""

import zlib

import numpy as np

DEFAULT_SEED = 42
SEED_MAX = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def stream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(check_seed(seed), spawn_key=(key,))))
