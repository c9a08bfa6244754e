from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topomap.evaluator.pairwise import (
    min_pair,
    min_pairwise_accuracy,
    overall_weighted_accuracy,
    pair_counts,
    pairwise_matrix,
    weighted_pairwise_accuracy,
)
from oracles import pair_wacc_fraction
from synth import THREE_CLUSTER_PRED, THREE_CLUSTER_TRUTH, as_ids

PRED, TRUTH = as_ids(THREE_CLUSTER_PRED), as_ids(THREE_CLUSTER_TRUTH)


class TestThreeClusterExample:
    def test_a_b(self):
        assert weighted_pairwise_accuracy(PRED, TRUTH, 0, 1) == 1.0

    def test_a_c(self):
        assert weighted_pairwise_accuracy(PRED, TRUTH, 0, 2) == 0.5

    def test_b_c(self):
        assert abs(weighted_pairwise_accuracy(PRED, TRUTH, 1, 2) - 7 / 12) <= 1e-12

    def test_a_b_equal_sizes_match_plain_accuracy(self):
        n_aa, n_ba, n_bb, n_ab = pair_counts(PRED, TRUTH, 0, 1)
        assert n_aa + n_ba == n_bb + n_ab
        assert weighted_pairwise_accuracy(PRED, TRUTH, 0, 1) == (n_aa + n_bb) / (n_aa + n_ba + n_bb + n_ab)

    def test_min_pair(self):
        assert min_pairwise_accuracy(PRED, TRUTH, 3) == (0, 2, 0.5)


def test_same_cluster_rejected():
    with pytest.raises(ValueError):
        weighted_pairwise_accuracy([0, 1], [0, 1], 1, 1)


def test_undefined_pair():
    assert weighted_pairwise_accuracy([2, 2], [2, 2], 0, 1) is None
    assert np.isnan(pairwise_matrix([2, 2], [2, 2], 3)[0, 1])


def test_one_side_empty_is_accuracy_of_other():
    # no truth-B rows survive; A rows: 3 correct, 1 predicted as B
    assert weighted_pairwise_accuracy([0, 0, 0, 1], [0, 0, 0, 0], 0, 1) == 0.75


def test_perfect_predictions():
    y = np.arange(12) % 4
    assert min_pairwise_accuracy(y, y, 4)[2] == 1.0


def test_all_undefined_raises():
    with pytest.raises(ValueError):
        min_pair(np.full((3, 3), np.nan))


def test_tie_goes_to_smallest_pair():
    M = np.array([[np.nan, 0.5, 0.7], [0.5, np.nan, 0.5], [0.7, 0.5, np.nan]])
    assert min_pair(M) == (0, 1, 0.5)


def test_overall_ignores_undefined():
    M = np.array([[np.nan, 0.5, np.nan], [0.5, np.nan, 1.0], [np.nan, 1.0, np.nan]])
    assert overall_weighted_accuracy(M) == 0.75


def test_matches_double_loop_oracle():
    rng = np.random.default_rng(7)
    k = 5
    truth = rng.integers(0, k, 150)
    pred = np.where(rng.random(150) < 0.7, truth, rng.integers(0, k, 150))
    best = None
    M = pairwise_matrix(pred, truth, k)
    for a in range(k):
        for b in range(a + 1, k):
            v = pair_wacc_fraction(pred.tolist(), truth.tolist(), a, b)
            assert M[a, b] == pytest.approx(v, abs=1e-12)
            if best is None or v < best[2]:
                best = (a, b, v)
    a, b, v = min_pairwise_accuracy(pred, truth, k)
    assert (a, b) == best[:2] and v == pytest.approx(best[2], abs=1e-12)


labels = st.integers(min_value=0, max_value=5)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=200), labels, labels)
def test_symmetric_and_bounded(pairs, A, B):
    if A == B:
        return
    pred = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    ab = weighted_pairwise_accuracy(pred, truth, A, B)
    ba = weighted_pairwise_accuracy(pred, truth, B, A)
    assert ab == ba
    if ab is not None:
        assert 0.0 <= ab <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(labels, labels), min_size=2, max_size=60), st.randoms(use_true_random=False))
def test_row_permutation_invariant(pairs, rnd):
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    a = pairwise_matrix([p for p, _ in pairs], [t for _, t in pairs], 6)
    b = pairwise_matrix([p for p, _ in shuffled], [t for _, t in shuffled], 6)
    np.testing.assert_array_equal(a, b)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=80))
def test_exact_rational_value(pairs):
    pred = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    n_aa, n_ba, n_bb, n_ab = pair_counts(pred, truth, 0, 1)
    sa, sb = n_aa + n_ba, n_bb + n_ab
    if sa == 0 or sb == 0:
        return
    exact = Fraction(sb * n_aa + sa * n_bb, sb * n_aa + sa * n_bb + sb * n_ba + sa * n_ab)
    assert weighted_pairwise_accuracy(pred, truth, 0, 1) == float(exact)
