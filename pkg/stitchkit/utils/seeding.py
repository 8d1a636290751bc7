"""
Per-sample seed derivation.

Every synthesized sample draws from its own ``numpy.random.Generator`` seeded
with ``mix_seed(master_seed, sample_index)``. The mix is the SplitMix64
finalizer applied to ``master_seed + (index + 1) * GOLDEN_GAMMA``, so seeds
depend only on the pair and never on worker count or completion order.

Constants (all 64-bit, arithmetic modulo 2**64):

    GOLDEN_GAMMA = 0x9E3779B97F4A7C15
    MIX_MULT_1   = 0xBF58476D1CE4E5B9   (after xor-shift 30)
    MIX_MULT_2   = 0x94D049BB133111EB   (after xor-shift 27)
    final xor-shift 31
"""

import numpy as np

MASK_64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB


def splitmix64(value: int) -> int:
    z = value & MASK_64
    z = ((z ^ (z >> 30)) * MIX_MULT_1) & MASK_64
    z = ((z ^ (z >> 27)) * MIX_MULT_2) & MASK_64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    if index < 0:
        raise ValueError(f"sample index must be non-negative, got {index}")
    return splitmix64(master_seed + (index + 1) * GOLDEN_GAMMA)


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(mix_seed(master_seed, index))
