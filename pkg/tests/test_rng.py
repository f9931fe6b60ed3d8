import numpy as np
import pytest

from cogsec.rng import as_generator, label_key, stream


def test_same_key_same_stream():
    assert np.array_equal(stream(5, "a", 3).random(10), stream(5, "a", 3).random(10))


@pytest.mark.parametrize("other", [(6, "a", 3), (5, "b", 3), (5, "a", 4)])
def test_distinct_keys_distinct_streams(other):
    assert not np.array_equal(stream(5, "a", 3).random(10), stream(*other).random(10))


def test_label_key_is_stable():
    # crc32, independent of PYTHONHASHSEED
    assert label_key("predict") == 0x8CC64618


def test_full_64_bit_seed_accepted():
    stream(2 ** 64 - 1, "x").random()


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        stream(-1)


def test_as_generator_passthrough_and_int():
    g = stream(1)
    assert as_generator(g) is g
    assert np.array_equal(as_generator(7).random(3), stream(7).random(3))
    assert np.array_equal(as_generator(None).random(3), stream(0).random(3))
