"""Counter-style seed derivation so every run is reproducible in isolation."""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed, *keys):
    """Fold integer/string keys into a master seed, returning a uint64.

    The same (master_seed, keys) always yields the same value, independent
    of platform and of any other stream derived from the master seed.
    """
    entropy = [int(master_seed) & _MASK64]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode("utf-8")))
        else:
            entropy.append(int(key) & _MASK64)
    seq = np.random.SeedSequence(entropy)
    return int(seq.generate_state(1, np.uint64)[0])


def generator(seed, *tags):
    """A PCG64 generator on the stream named by (seed, *tags)."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *tags)))
