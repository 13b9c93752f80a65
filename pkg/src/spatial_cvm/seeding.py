"""Hierarchical seeding.

A master seed maps every replication (or permutation, or substream) index to
a child seed in ``[0, 2**31)``.  The map is a keyed bijection on 31-bit
integers, so distinct indices below ``2**31`` never collide.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

SEED_BITS = 31
SEED_MASK = (1 << SEED_BITS) - 1


@lru_cache(maxsize=256)
def _keys(master_seed: int) -> tuple[int, int, int, int]:
    state = np.random.SeedSequence(int(master_seed)).generate_state(4, dtype=np.uint32)
    k0, k1, k2, k3 = (int(v) & SEED_MASK for v in state)
    # odd multipliers keep the multiply step invertible mod 2**31
    return k0, k1 | 1, k2 | 1, k3


def _mix(x, keys, mask):
    k0, k1, k2, k3 = keys
    x = (x + k0) & mask
    x ^= x >> 15
    x = (x * k1) & mask
    x ^= x >> 13
    x = (x * k2) & mask
    x ^= x >> 16
    return (x + k3) & mask


def derive_seed(master_seed: int, index: int) -> int:
    """Child seed for ``index`` under ``master_seed``; a pure function of both."""
    if index < 0:
        raise ValueError("index must be non-negative")
    x = index & SEED_MASK
    hi = index >> SEED_BITS
    if hi:
        # indices past 2**31 fold their high bits into the key; distinctness is
        # only guaranteed below 2**31
        master_seed = hash((master_seed, hi)) & 0xFFFFFFFFFFFF
    return _mix(x, _keys(master_seed), SEED_MASK)


def derive_seeds(master_seed: int, indices) -> np.ndarray:
    """Vectorised :func:`derive_seed` for indices in ``[0, 2**31)``."""
    idx = np.asarray(indices, dtype=np.uint64)
    if idx.size and int(idx.max()) > SEED_MASK:
        raise ValueError("vectorised derivation requires indices < 2**31")
    keys = tuple(np.uint64(k) for k in _keys(master_seed))
    return _mix(idx, keys, np.uint64(SEED_MASK)).astype(np.int64)


def rng_for(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, index))
