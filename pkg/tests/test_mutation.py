import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topomap.datamodel import write_tmx
from topomap.mutation import (
    MutationError,
    build_killing_aggregation,
    build_runset,
    cluster_density,
    cohens_d,
    contributors,
    is_killed,
    kill_half_full,
    killing_strength,
    kills_subset,
    metric_on_subset,
    misprediction_probability,
    random_baseline,
    runset_from_predictions,
)
from oracles import cohens_d as oracle_d
from oracles import mann_whitney_two_sided
from synth import planted_mutant, runset


class TestRunSet:
    def test_perfect_predictions(self):
        truth = np.array([0, 1, 2, 1])
        rs = runset_from_predictions(np.tile(truth, (3, 1)), truth)
        assert not rs.correctness.any()
        np.testing.assert_array_equal(rs.metric_per_run, [1.0, 1.0, 1.0])

    def test_metric_is_one_minus_error_rate(self):
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 3, 40)
        preds = rng.integers(0, 3, (6, 40))
        rs = runset_from_predictions(preds, truth)
        np.testing.assert_allclose(rs.metric_per_run, 1 - rs.correctness.mean(axis=1), atol=1e-9)

    def test_regression_threshold_inclusive(self):
        truth = np.array([0.0, 1.0])
        preds = np.array([[0.3, 1.0], [0.29, 1.0]])
        rs = runset_from_predictions(preds, truth, "regression", tau=0.3)
        np.testing.assert_array_equal(rs.correctness, [[True, False], [False, False]])

    def test_regression_two_dims_euclidean(self):
        truth = np.array([[0.0, 0.0]])
        preds = np.array([[0.3, 0.4], [0.1, 0.1]])  # errors 0.5 and 0.14
        rs = runset_from_predictions(preds, truth, "regression", tau=0.5)
        np.testing.assert_array_equal(rs.correctness[:, 0], [True, False])
        np.testing.assert_allclose(rs.metric_per_run, [0.125, 0.01])

    def test_regression_needs_tau(self):
        with pytest.raises(MutationError):
            runset_from_predictions(np.zeros((2, 2)), np.zeros(2), "regression")

    def test_needs_two_runs(self):
        with pytest.raises(MutationError):
            runset_from_predictions(np.zeros((1, 3)), np.zeros(3))

    def test_column_mismatch(self):
        with pytest.raises(MutationError):
            runset_from_predictions(np.zeros((3, 4)), np.zeros(3))

    def test_build_from_file(self, tmp_path):
        write_tmx(tmp_path / "p.tmx", np.array([[0, 1], [1, 1]]))
        rs = build_runset(tmp_path / "p.tmx", [0, 1], model_id="m")
        np.testing.assert_array_equal(rs.metric_per_run, [1.0, 0.5])


class TestContributors:
    def test_probability(self):
        wrong = np.zeros((20, 2), dtype=bool)
        wrong[:5, 0] = True
        np.testing.assert_array_equal(misprediction_probability(runset(wrong)), [0.25, 0.0])

    def test_identical_matrices(self):
        wrong = np.random.default_rng(0).random((10, 30)) < 0.3
        assert not contributors(runset(wrong), runset(wrong)).any()

    def test_strict_increase(self):
        orig = np.zeros((20, 2), dtype=bool)
        mut = orig.copy()
        mut[0, 1] = True  # P = 0.05 for input 1
        np.testing.assert_array_equal(contributors(runset(orig), runset(mut)), [False, True])


class TestSubsetMetric:
    def test_full_subset_equals_metric(self):
        wrong = np.random.default_rng(1).random((8, 25)) < 0.4
        rs = runset(wrong)
        np.testing.assert_allclose(metric_on_subset(rs, np.arange(25)), rs.metric_per_run)

    def test_singleton(self):
        wrong = np.zeros((4, 3), dtype=bool)
        wrong[[0, 2], 1] = True
        np.testing.assert_array_equal(metric_on_subset(runset(wrong), [1]), [0, 1, 0, 1])

    def test_empty_subset(self):
        with pytest.raises(MutationError):
            metric_on_subset(runset(np.zeros((2, 2), bool)), [])


class TestIsKilled:
    def test_identical_samples(self):
        a = [0.9, 0.91, 0.92, 0.9]
        v = is_killed(a, a)
        assert not v.killed

    def test_identical_constants(self):
        v = is_killed([0.8] * 5, [0.8] * 5)
        assert (v.p_value, v.effect_size, v.killed) == (1.0, 0.0, False)

    def test_distinct_constants_infinite_effect(self):
        assert cohens_d([1.0] * 5, [0.0] * 5) == math.inf
        assert is_killed([1.0] * 20, [0.0] * 20).killed

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=30), st.lists(st.floats(0, 1), min_size=2, max_size=30))
    def test_verdict_is_the_conjunction(self, a, b):
        v = is_killed(a, b)
        assert v.killed == (v.p_value < 0.05 and abs(v.effect_size) >= 0.5)

    def test_matches_oracle_on_random_samples(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.normal(0.9, 0.02, 20)
            b = rng.normal(0.9 - rng.uniform(0, 0.03), 0.02, 20)
            v = is_killed(a, b)
            assert v.p_value == pytest.approx(mann_whitney_two_sided(a, b), abs=1e-6)
            assert v.effect_size == pytest.approx(oracle_d(a, b), abs=1e-9)


class TestAggregation:
    def test_extreme_mutant_single_densest_cluster(self):
        assignments = np.array([0, 0, 0, 1, 1, 2, 2, 2, 2, 2])
        orig = runset(np.zeros((20, 10), bool))
        mut = runset(np.ones((20, 10), bool))
        agg = build_killing_aggregation(assignments, orig, mut)
        assert agg.killable
        assert agg.clusters == [0]
        assert agg.rho_k == 0.3
        assert agg.rho_c == 1.0

    def test_self_mutant_not_killable(self):
        wrong = np.random.default_rng(0).random((20, 40)) < 0.2
        agg = build_killing_aggregation(np.arange(40) % 4, runset(wrong), runset(wrong.copy()))
        assert not agg.killable
        assert agg.rho_k == 1.0

    def test_density_order_and_rho_c_dominates(self):
        for seed in range(5):
            assignments, orig, mut, _ = planted_mutant(seed)
            agg = build_killing_aggregation(assignments, orig, mut)
            density = cluster_density(assignments, contributors(orig, mut))
            dens = [density[c] for c in agg.order]
            assert dens == sorted(dens, reverse=True)
            overall = contributors(orig, mut).mean()
            assert agg.rho_c >= overall

    def test_assignment_length_checked(self):
        rs = runset(np.zeros((3, 4), bool))
        with pytest.raises(MutationError):
            build_killing_aggregation([0, 1], rs, rs)


class TestBaseline:
    def test_never_killable(self):
        wrong = np.random.default_rng(0).random((20, 50)) < 0.2
        b = random_baseline(10, runset(wrong), runset(wrong), R=5)
        assert b.rho_d == 0.0

    def test_whole_set(self):
        assignments, orig, mut, _ = planted_mutant(0)
        assert kills_subset(orig, mut, np.arange(orig.n_inputs)).killed
        b = random_baseline(orig.n_inputs, orig, mut, R=3)
        assert b.rho_d == 1.0

    def test_contributor_fraction_matches_hypergeometric(self):
        assignments, orig, mut, _ = planted_mutant(1)
        contrib = contributors(orig, mut)
        n, K, size, R = len(contrib), int(contrib.sum()), 100, 10
        b = random_baseline(size, orig, mut, R=R, seed=4)
        p = K / n
        sd = math.sqrt(p * (1 - p) * (n - size) / (n - 1) / size / R)
        assert abs(b.rho_c_random - p) <= 3 * sd

    def test_deterministic(self):
        _, orig, mut, _ = planted_mutant(2)
        assert random_baseline(80, orig, mut, seed=9) == random_baseline(80, orig, mut, seed=9)

    def test_bad_size(self):
        rs = runset(np.zeros((3, 4), bool))
        with pytest.raises(MutationError):
            random_baseline(5, rs, rs)


class _Agg:
    def __init__(self, clusters, killable=True, members=None):
        self.clusters, self.killable, self.members = clusters, killable, members


class TestCrossMutant:
    def test_single_aggregation(self):
        assert killing_strength([_Agg([3])]).rho_a[3] == 1.0

    def test_two_of_four(self):
        ks = killing_strength([_Agg([1, 2]), _Agg([2]), _Agg([0]), _Agg([1])])
        assert ks.rho_a[1] == 0.5
        assert ks.ranking[0] == (1, 0.5)

    def test_no_killable(self):
        with pytest.raises(MutationError):
            killing_strength([_Agg([0], killable=False)])

    def test_single_configuration_operator(self):
        assignments = np.repeat(np.arange(4), 10)
        orig = runset(np.zeros((20, 40), bool))
        mut = runset(np.ones((20, 40), bool))
        agg = build_killing_aggregation(assignments, orig, mut, "m0")
        out = kill_half_full({"op": ["m0"]}, {"m0": agg}, {"m0": mut}, orig)
        assert out["op"] == (1.0, 1.0)

    def test_each_kills_only_itself(self):
        n_runs = 20
        assignments = np.repeat([0, 1], 10)
        orig = runset(np.zeros((n_runs, 20), bool))
        w0 = np.zeros((n_runs, 20), bool)
        w0[:, :10] = True
        w1 = np.zeros((n_runs, 20), bool)
        w1[:, 10:] = True
        m0, m1 = runset(w0, "m0"), runset(w1, "m1")
        aggs = {"m0": build_killing_aggregation(assignments, orig, m0),
                "m1": build_killing_aggregation(assignments, orig, m1)}
        assert aggs["m0"].clusters == [0] and aggs["m1"].clusters == [1]
        out = kill_half_full({"op": ["m0", "m1"]}, aggs, {"m0": m0, "m1": m1}, orig)
        assert out["op"] == (1.0, 0.0)

    def test_nothing_killable_is_nan(self):
        wrong = np.zeros((5, 6), bool)
        rs = runset(wrong)
        agg = build_killing_aggregation(np.zeros(6, dtype=int), rs, rs)
        out = kill_half_full({"op": ["a"]}, {"a": agg}, {"a": rs}, rs)
        assert all(math.isnan(v) for v in out["op"])
