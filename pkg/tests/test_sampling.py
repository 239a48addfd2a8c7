import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdboot.exceptions import InvalidConfigurationError
from sdboot.sampling import (
    derive_rng,
    draw_iid_subset,
    draw_mbb_offsets,
    draw_mbb_weights,
    draw_multinomial_weights,
    draw_ts_subset,
    mbb_weights_from_offsets,
)


def test_iid_subset_full_coverage():
    sub = draw_iid_subset(5, 5, derive_rng(3))
    assert set(sub.indices.tolist()) == {0, 1, 2, 3, 4}
    assert not sub.contiguous and sub.parent_n == 5


def test_iid_subset_uniform_over_two_points():
    rng = derive_rng(11)
    hits = sum(draw_iid_subset(2, 1, rng).indices[0] == 0 for _ in range(10000))
    assert abs(hits / 10000 - 0.5) < 0.02


@pytest.mark.parametrize("n,b", [(10, 11), (3, 0), (0, 0)])
def test_subset_precondition(n, b):
    with pytest.raises(InvalidConfigurationError):
        draw_iid_subset(n, b, derive_rng(0))
    with pytest.raises(InvalidConfigurationError):
        draw_ts_subset(n, b, derive_rng(0))


def test_iid_inclusion_probability():
    n, b, draws = 20, 6, 6000
    rng = derive_rng(5)
    counts = np.zeros(n)
    for _ in range(draws):
        counts[draw_iid_subset(n, b, rng).indices] += 1
    p = b / n
    sd = np.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(counts / draws - p) < 3.5 * sd)


@given(st.integers(1, 200), st.data())
@settings(max_examples=100, deadline=None)
def test_iid_subset_distinct_sorted(n, data):
    b = data.draw(st.integers(1, n))
    sub = draw_iid_subset(n, b, derive_rng(data.draw(st.integers(0, 2**32))))
    idx = sub.indices
    assert idx.shape == (b,)
    assert len(set(idx.tolist())) == b
    assert idx.min() >= 0 and idx.max() < n
    assert np.all(np.diff(idx) > 0)


def test_ts_subset_single_window():
    sub = draw_ts_subset(5, 5, derive_rng(1))
    assert sub.indices.tolist() == [0, 1, 2, 3, 4] and sub.contiguous


def test_ts_subset_start_uniform():
    rng = derive_rng(2)
    starts = np.array([draw_ts_subset(4, 2, rng).start for _ in range(10000)])
    freq = np.bincount(starts, minlength=3) / 10000
    assert freq.shape == (3,)
    assert np.all(np.abs(freq - 1 / 3) < 0.02)


@given(st.integers(1, 300), st.data())
@settings(max_examples=100, deadline=None)
def test_ts_subset_contiguous(n, data):
    b = data.draw(st.integers(1, n))
    sub = draw_ts_subset(n, b, derive_rng(data.draw(st.integers(0, 2**32))))
    assert sub.indices.tolist() == list(range(sub.start, sub.start + b))
    assert 0 <= sub.start <= n - b


def test_multinomial_single_cell():
    assert draw_multinomial_weights(7, 1, derive_rng(0)).weights.tolist() == [7]


def test_multinomial_sum():
    w = draw_multinomial_weights(100, 4, derive_rng(0))
    assert w.weights.sum() == 100 and w.b == 4


def test_multinomial_moments():
    # Multinomial(1000; 1/10 each): E W_1 = 100, Var W_1 = 1000 * 0.1 * 0.9 = 90
    rng = derive_rng(9)
    first = np.array([draw_multinomial_weights(1000, 10, rng).weights[0] for _ in range(5000)])
    assert abs(first.mean() - 100) < 2
    assert abs(first.var(ddof=1) / 90 - 1) < 0.10


@pytest.mark.parametrize("n,b", [(0, 3), (3, 0)])
def test_multinomial_precondition(n, b):
    with pytest.raises(InvalidConfigurationError):
        draw_multinomial_weights(n, b, derive_rng(0))


@pytest.mark.parametrize(
    "n,b,L,offsets,expected",
    [
        (4, 4, 2, (0, 2), [1, 1, 1, 1]),
        (4, 4, 2, (0, 0), [2, 2, 0, 0]),
        # two full blocks at 1 -> positions 1,2 twice; truncated block (L'=1) at 2
        (5, 4, 2, (1, 1, 2), [0, 2, 3, 0]),
    ],
)
def test_mbb_weights_hand_traces(n, b, L, offsets, expected):
    assert mbb_weights_from_offsets(n, b, L, offsets).weights.tolist() == expected


def _mbb_loop(n, b, L, offsets):
    w = [0] * b
    remaining = n
    for t in offsets:
        for i in range(t, t + min(L, remaining)):
            w[i] += 1
        remaining -= min(L, remaining)
    return w


@given(st.integers(1, 60), st.data())
@settings(max_examples=200, deadline=None)
def test_mbb_weights_match_loop(n, data):
    b = data.draw(st.integers(1, n))
    L = data.draw(st.integers(1, b))
    offsets = draw_mbb_offsets(n, b, L, derive_rng(data.draw(st.integers(0, 2**32))))
    w = mbb_weights_from_offsets(n, b, L, offsets)
    assert w.weights.tolist() == _mbb_loop(n, b, L, offsets)
    assert w.weights.sum() == n
    assert len(offsets) == -(-n // L)


def test_mbb_block_equals_subset():
    # L == b leaves a single admissible offset
    w = draw_mbb_weights(10, 4, 4, derive_rng(0)).weights
    assert w.tolist() == [3, 3, 2, 2]


@pytest.mark.parametrize("n,b,L", [(10, 4, 5), (10, 4, 0), (3, 4, 2)])
def test_mbb_precondition(n, b, L):
    with pytest.raises(InvalidConfigurationError):
        draw_mbb_weights(n, b, L, derive_rng(0))


def test_derived_streams_independent_of_order():
    a = derive_rng(42, 3, 1).random(5)
    derive_rng(42, 1, 1).random(100)
    b = derive_rng(42, 3, 1).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, derive_rng(42, 3, 2).random(5))
