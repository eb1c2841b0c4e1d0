import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from private_minhash.sketching import (
    Sketch,
    TableFamily,
    UserVector,
    derive_seeds,
    make_hash_family,
    minwise_value,
    mix64,
    range_b_sketch,
    sketch_items,
)
from private_minhash.synthetic import PairSpec, gen_pair


def worked_example_family():
    """Four range-3 functions on items 1..6 giving x* = (2,0,1,2), y* = (2,0,2,2)
    for x = {2,3,5}, y = {3,5,6}. Item 0 is unused padding."""
    orders = [
        [3, 2, 5, 6, 1, 4, 0],
        [5, 3, 6, 2, 1, 4, 0],
        [2, 6, 3, 5, 1, 4, 0],
        [2, 6, 5, 3, 4, 1, 0],
    ]
    ranks = np.array([np.argsort(o) for o in orders])
    buckets = np.zeros((4, 7), dtype=np.int64)
    buckets[0, 3] = 2
    buckets[1, 5] = 0
    buckets[2, 2], buckets[2, 6] = 1, 2
    buckets[3, 2], buckets[3, 6] = 2, 2
    return TableFamily(ranks=ranks, bucket_table=buckets, B=3)


def test_family_echoes_parameters():
    f = make_hash_family(K=4, B=3, m=6, master_seed=42)
    assert (f.K, f.B, f.m, f.master_seed) == (4, 3, 6, 42)
    s = range_b_sketch(f, UserVector([0, 4, 5], 6))
    assert s.K == 4 and set(s.values.tolist()) <= {0, 1, 2}


def test_same_parameters_same_sketch():
    x = UserVector([1, 7, 30, 99], 100)
    a = range_b_sketch(make_hash_family(16, 5, 100, 123), x)
    b = range_b_sketch(make_hash_family(16, 5, 100, 123), x)
    assert a == b


def test_sketch_is_frozen_across_releases():
    # pins the keyed hash: a change here silently changes every published sketch
    f = make_hash_family(8, 4, 1000, 2024)
    s = range_b_sketch(f, UserVector([3, 14, 159, 265, 358, 979], 1000))
    assert s.values.tolist() == [0, 3, 1, 2, 0, 1, 2, 2]


def test_identity_case():
    f = make_hash_family(1, 2, 10, 7)
    x = UserVector([1, 4, 9], 10)
    assert range_b_sketch(f, x) == range_b_sketch(f, UserVector([9, 4, 1], 10))


def test_singleton_minwise():
    f = make_hash_family(32, 2, 10, 3)
    for slot in range(32):
        assert minwise_value(f, slot, UserVector([5], 10)) == 5


def test_empty_set_rejected():
    f = make_hash_family(4, 2, 10, 0)
    with pytest.raises(ValueError, match="empty set has no MinHash"):
        range_b_sketch(f, UserVector([], 10))
    with pytest.raises(ValueError, match="empty set has no MinHash"):
        minwise_value(f, 0, UserVector([], 10))


@pytest.mark.parametrize("kwargs", [dict(K=0, B=2, m=5), dict(K=3, B=1, m=5), dict(K=3, B=2, m=0)])
def test_bad_family_parameters(kwargs):
    with pytest.raises(ValueError):
        make_hash_family(master_seed=0, **kwargs)


def test_user_vector_validation():
    with pytest.raises(ValueError):
        UserVector([1, 1], 5)
    with pytest.raises(ValueError):
        UserVector([5], 5)
    with pytest.raises(ValueError):
        UserVector([-1], 5)
    assert UserVector([3, 1, 2], 5).items == (1, 2, 3)


@settings(max_examples=50, deadline=None)
@given(items=st.sets(st.integers(0, 499), min_size=1, max_size=40), seed=st.integers(0, 2**64 - 1),
       perm_seed=st.integers(0, 1000))
def test_insertion_order_never_matters(items, seed, perm_seed):
    f = make_hash_family(12, 3, 500, seed)
    order = list(items)
    np.random.default_rng(perm_seed).shuffle(order)
    assert range_b_sketch(f, UserVector(order, 500)) == range_b_sketch(f, UserVector(sorted(items), 500))


@settings(max_examples=50, deadline=None)
@given(items=st.sets(st.integers(0, 199), min_size=1, max_size=30), seed=st.integers(0, 2**64 - 1))
def test_minwise_picks_a_member_and_sketch_in_range(items, seed):
    f = make_hash_family(9, 7, 200, seed)
    x = UserVector(items, 200)
    for slot in range(f.K):
        assert minwise_value(f, slot, x) in items
    s = range_b_sketch(f, x)
    assert s.K == 9 and s.values.min() >= 0 and s.values.max() < 7


def test_minwise_matches_brute_force_argmin():
    f = make_hash_family(5, 2, 50, 99)
    items = np.array([4, 8, 15, 16, 23, 42])
    keys = mix64(mix64(items.astype(np.uint64) + np.uint64(0xD1B54A32D192ED03))[None, :]
                 ^ f.order_seeds[:, None])
    for slot in range(5):
        expected = min(zip(keys[slot].tolist(), items.tolist()))[1]
        assert minwise_value(f, slot, UserVector(items, 50)) == expected


def test_derived_seeds_are_prefix_stable():
    assert np.array_equal(derive_seeds(5, 10)[:4], derive_seeds(5, 4))
    assert not np.array_equal(derive_seeds(5, 4), derive_seeds(6, 4))


def test_minwise_agreement_rate_over_seeds():
    # Pr[agree] = J = 2/4 for x={2,3,5}, y={3,5,6}; 100k slots drawn from independent seeds
    f = make_hash_family(100_000, 2, 7, 11)
    wx = f.winners(np.array([2, 3, 5]))
    wy = f.winners(np.array([3, 5, 6]))
    assert abs(np.mean(wx == wy) - 0.5) < 0.01


def test_minwise_agreement_over_distinct_master_seeds():
    agree = [minwise_value(make_hash_family(1, 2, 7, s), 0, UserVector([2, 3, 5], 7))
             == minwise_value(make_hash_family(1, 2, 7, s), 0, UserVector([3, 5, 6], 7))
             for s in range(4000)]
    assert abs(np.mean(agree) - 0.5) < 3 * np.sqrt(0.25 / 4000)


def test_range_b_collision_rate_j_half_b3():
    f = make_hash_family(100_000, 3, 7, 5)
    sx = sketch_items(f, np.array([2, 3, 5]))
    sy = sketch_items(f, np.array([3, 5, 6]))
    assert abs(np.mean(sx == sy) - 2 / 3) < 0.01


@pytest.mark.parametrize("J", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("B", [2, 4])
def test_collision_law(J, B):
    R = 40_000
    x, y, Jr = gen_pair(PairSpec(m=5000, tau=30, J_target=J, seed=1))
    f = make_hash_family(R, B, 5000, 77)
    q = (1 - Jr) / B + Jr
    rate = np.mean(sketch_items(f, x.as_array()) == sketch_items(f, y.as_array()))
    assert abs(rate - q) <= 3 * np.sqrt(0.25 / R)


@pytest.mark.parametrize("B", [2, 3, 5, 16])
def test_bucket_marginals_uniform(B):
    R = 60_000
    f = make_hash_family(R, B, 10_000, 8)
    counts = np.bincount(sketch_items(f, np.array([1234])), minlength=B)
    np.testing.assert_allclose(counts / R, 1 / B, atol=4 * np.sqrt((1 / B) * (1 - 1 / B) / R))


def test_table_family_reproduces_worked_example():
    f = worked_example_family()
    assert range_b_sketch(f, UserVector([2, 3, 5], 7)).values.tolist() == [2, 0, 1, 2]
    assert range_b_sketch(f, UserVector([3, 5, 6], 7)).values.tolist() == [2, 0, 2, 2]


def test_random_table_family_collision_law():
    # ideal permutations: same law as the keyed family, checked at smaller R
    R = 20_000
    f = TableFamily.random(R, 3, 8, seed=4)
    sx = sketch_items(f, np.array([2, 3, 5]))
    sy = sketch_items(f, np.array([3, 5, 6]))
    assert abs(np.mean(sx == sy) - 2 / 3) <= 3 * np.sqrt(0.25 / R)


def test_sketch_line_and_bytes_round_trip():
    s = Sketch(np.array([0, 4, 2, 255, 7]), 256)
    assert s.to_line() == "0,4,2,255,7"
    assert Sketch.from_line(s.to_line(), 256) == s
    assert len(s.to_bytes()) == 5
    assert Sketch.from_bytes(s.to_bytes(), 256) == s


def test_binary_form_needs_small_b():
    with pytest.raises(ValueError):
        Sketch(np.array([1, 300]), 512).to_bytes()


def test_sketch_rejects_out_of_range():
    with pytest.raises(ValueError):
        Sketch(np.array([0, 3]), 3)
