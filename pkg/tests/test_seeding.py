import numpy as np
import pytest

from stitchkit.utils.seeding import MASK_64, mix_seed, sample_rng, splitmix64


def test_mix_matches_the_reference_splitmix64_stream():
    # Reference SplitMix64 seeded with 0 yields these first two outputs.
    assert mix_seed(0, 0) == 0xE220A8397B1DCDAF
    assert mix_seed(0, 1) == 0x6E789E6AA1B965F4


@pytest.mark.parametrize("master", [0, 1, 42, 2**63, -5])
def test_mixed_seeds_are_64_bit_and_distinct(master):
    seeds = [mix_seed(master, index) for index in range(1000)]
    assert all(0 <= seed <= MASK_64 for seed in seeds)
    assert len(set(seeds)) == len(seeds)


def test_neighbouring_master_seeds_decorrelate():
    assert mix_seed(1, 0) != mix_seed(0, 1)
    assert bin(mix_seed(1, 0) ^ mix_seed(2, 0)).count("1") > 10


def test_negative_index_is_rejected():
    with pytest.raises(ValueError):
        mix_seed(0, -1)


def test_splitmix64_wraps_to_64_bits():
    assert 0 <= splitmix64(2**70 + 3) <= MASK_64
    assert splitmix64(2**64 + 3) == splitmix64(3)


def test_sample_streams_depend_only_on_the_pair():
    a = sample_rng(7, 3).integers(0, 2**32, size=8)
    b = sample_rng(7, 3).integers(0, 2**32, size=8)
    c = sample_rng(7, 4).integers(0, 2**32, size=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
