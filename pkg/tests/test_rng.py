"""
Unit tests for the deterministic random streams.
"""
import numpy as np
import pytest

from src.utils.rng import RngStream, as_stream, mix64


@pytest.mark.unit
def test_stream_test_vectors():
    """Test the published SplitMix64 sequences."""
    assert [int(w) for w in RngStream(0).next_u64(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F,
    ]
    assert [int(w) for w in RngStream(42).next_u64(4)] == [
        13679457532755275413, 2949826092126892291, 5139283748462763858, 6349198060258255764,
    ]
    assert [int(w) for w in RngStream(7).next_u64(2)] == [7191089600892374487, 309689372594955804]


@pytest.mark.unit
def test_mix64_vectors():
    """Test the finalizer on fixed inputs."""
    assert mix64(0) == 0
    assert mix64(1) == 6238072747940578789


@pytest.mark.unit
def test_spawn_seeds():
    """Test child seeds are fixed functions of parent seed and index."""
    root = RngStream(42)
    assert root.spawn(0).seed == 814261035509592648
    assert root.spawn(1).seed == 11333517100451040940


@pytest.mark.unit
def test_draws_split_across_calls():
    """Test the counter makes chunked draws equal one big draw."""
    a = RngStream(3)
    b = RngStream(3)
    chunked = np.concatenate([a.next_u64(5), a.next_u64(7)])
    assert np.array_equal(chunked, b.next_u64(12))
    assert a.state() == (3, 12)


@pytest.mark.unit
def test_equal_seeds_equal_streams():
    """Test identical seeds give identical draws and different seeds differ early."""
    assert np.array_equal(RngStream(11).next_u64(10_000), RngStream(11).next_u64(10_000))
    assert not np.array_equal(RngStream(11).next_u64(16), RngStream(12).next_u64(16))


@pytest.mark.unit
def test_spawn_independent_of_parent_state():
    """Test spawn does not depend on how much the parent has drawn."""
    parent = RngStream(5)
    before = parent.spawn(2).next_u64(4)
    parent.next_u64(100)
    assert np.array_equal(before, parent.spawn(2).next_u64(4))


@pytest.mark.unit
def test_distributions():
    """Test ranges and rough moments of the derived distributions."""
    rng = RngStream(21)
    u = rng.random(20_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01
    z = rng.normal(20_000)
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1.0) < 0.03
    ints = rng.integers(7, 1000)
    assert ints.min() >= 0 and ints.max() <= 6
    assert rng.normal((3, 4)).shape == (3, 4)
    assert rng.uniform(2.0, 3.0, 10).min() >= 2.0


@pytest.mark.unit
def test_permutation_and_choice():
    """Test permutations and sampling without replacement."""
    rng = RngStream(4)
    perm = rng.permutation(50)
    assert sorted(perm.tolist()) == list(range(50))
    picks = rng.choice(10, 4)
    assert len(set(picks.tolist())) == 4
    with pytest.raises(ValueError):
        rng.choice(3, 4)
    assert rng.choice(3, 10, replace=True).size == 10


@pytest.mark.unit
def test_bernoulli_mask_rate():
    """Test the keep probability of Bernoulli masks."""
    mask = RngStream(2).bernoulli_mask((100, 100), 0.7)
    assert mask.dtype == bool
    assert abs(mask.mean() - 0.7) < 0.02


@pytest.mark.unit
def test_seed_range():
    """Test seeds outside 64 bits are rejected."""
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(1 << 64)


@pytest.mark.unit
def test_as_stream():
    """Test stream coercion from seeds, streams and None."""
    stream = RngStream(9)
    assert as_stream(stream) is stream
    assert as_stream(9).seed == 9
    assert as_stream(None, default_seed=4).seed == 4
