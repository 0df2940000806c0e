import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conewalk.rng import RandomStream, derive_key, random_bits, uniform_at
from conewalk.stats import chi_square_gof, ks_uniform

keys = st.integers(0, 2**64 - 1)


@given(keys, st.integers(0, 2**40))
def test_uniform_in_unit_interval(key, counter):
    u = uniform_at(np.uint64(key), np.uint64(counter))
    assert 0.0 <= u < 1.0


@given(keys, st.integers(0, 2**40))
def test_draw_is_pure_function_of_key_and_counter(key, counter):
    a = RandomStream(key, counter).uniform()
    b = RandomStream(key, counter).uniform()
    assert a == b


def test_bulk_matches_scalar():
    s = RandomStream.from_seed(3, "bulk")
    bulk = s.uniforms(100)
    t = RandomStream.from_seed(3, "bulk")
    assert np.array_equal(bulk, [t.uniform() for _ in range(100)])
    assert s.counter == t.counter == 100


def test_counter_map_is_injective_on_a_block():
    key = np.uint64(derive_key(1, "inj"))
    bits = {int(random_bits(key, np.uint64(c))) for c in range(20000)}
    assert len(bits) == 20000


def test_spawn_does_not_advance_parent():
    s = RandomStream.from_seed(5)
    s.uniform()
    child = s.spawn("child")
    assert s.counter == 1 and child.counter == 0 and child.key != s.key


def test_derive_key_separates_purposes():
    assert derive_key(1, 0, "walk") != derive_key(1, 0, "decompose")
    assert derive_key(1, 0, "walk") == derive_key(1, 0, "walk")


def test_uniforms_pass_ks_and_byte_histogram():
    u = RandomStream.from_seed(11, "ks").uniforms(20000)
    assert ks_uniform(u).p_value > 1e-3
    counts = np.bincount((u * 16).astype(int), minlength=16)
    assert chi_square_gof(counts, np.full(16, 1 / 16)).p_value > 1e-3


def test_integers_range():
    x = RandomStream.from_seed(2).integers(7, 5000)
    assert x.min() == 0 and x.max() == 6


def test_normals_moments():
    z = RandomStream.from_seed(4).normals(50000)
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1) < 0.03


def test_bad_key_rejected():
    with pytest.raises(ValueError):
        RandomStream(-1)
