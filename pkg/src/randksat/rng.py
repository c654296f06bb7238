"""Seeded random streams.

Bulk draws (instance generation, coin flips over all variables) go through
numpy generators; scalar draws in the inner loops of the samplers use
``random.Random`` because it is much cheaper per call and its ``randrange``
is exact for arbitrarily large integers.
"""
import random

import numpy as np


def seed_sequence(seed, *path):
    """Deterministic child seed sequence for ``seed`` addressed by integer ``path``."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(0 if seed is None else int(seed))
    if path:
        ss = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(p) for p in path))
    return ss


def numpy_rng(seed, *path):
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def py_rng(seed, *path):
    state = seed_sequence(seed, *path).generate_state(4, dtype=np.uint32)
    value = 0
    for word in state:
        value = (value << 32) | int(word)
    return random.Random(value)


def spawn_seeds(seed, count):
    """``count`` independent integer seeds derived from ``seed``."""
    return [int(seed_sequence(seed, i).generate_state(1, dtype=np.uint64)[0] >> 1) for i in range(count)]
