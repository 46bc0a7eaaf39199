"""Counter-style seed derivation.

Child seeds are a pure function of a parent seed and a tuple of keys, so work
items can be evaluated in any order, on any number of workers, and still draw
the same random numbers.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("seed keys must be non-negative")
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(*keys) -> int:
    """Hash ``keys`` (ints or strings) into a 64-bit unsigned seed."""
    entropy = [_key_to_int(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def make_rng(*keys) -> np.random.Generator:
    """Philox generator keyed by ``derive_seed(*keys)``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(*keys)))
