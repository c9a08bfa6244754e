import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from topomap.birch import CFTree, ward_merge
from topomap.clustering import (
    ClusterModel,
    ClusteringError,
    assign,
    birch_fit,
    fit,
    kmeans_fit,
    load_model,
    save_model,
)
from oracles import brute_force_2means, linear_scan_nearest
from synth import gaussian_blobs

TRIADS = np.array([[0, 0], [0.1, 0], [0, 0.1], [10, 0], [10.1, 0], [10, 0.1]])


class TestKMeans:
    def test_k_equals_rows(self):
        X = np.random.default_rng(0).normal(size=(7, 2))
        m = kmeans_fit(X, 7)
        assert m.inertia == pytest.approx(0.0, abs=1e-20)
        assert sorted(m.assignments.tolist()) == list(range(7))

    def test_two_triads(self):
        m = kmeans_fit(TRIADS, 2, seed=3)
        a = m.assignments
        assert len(set(a[:3])) == 1 and len(set(a[3:])) == 1 and a[0] != a[3]

    def test_small_instances_match_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            X = rng.normal(size=(int(rng.integers(3, 8)), 2))
            m = kmeans_fit(X, 2, seed=0)
            assert m.inertia >= brute_force_2means(X) - 1e-9

    def test_inertia_history_non_increasing(self):
        X = np.random.default_rng(2).normal(size=(200, 3))
        m = kmeans_fit(X, 6, seed=1, restarts=1)
        h = np.array(m.inertia_history)
        assert np.all(np.diff(h) <= 1e-9 * h[0])

    def test_assignment_is_nearest_centroid(self):
        X = np.random.default_rng(3).normal(size=(150, 2))
        m = kmeans_fit(X, 5, seed=0)
        np.testing.assert_array_equal(m.assignments, linear_scan_nearest(X, m.centroids))

    def test_deterministic(self):
        X = np.random.default_rng(3).normal(size=(100, 2))
        a, b = kmeans_fit(X, 4, seed=11), kmeans_fit(X, 4, seed=11)
        assert a.centroids.tobytes() == b.centroids.tobytes()

    def test_k_too_large(self):
        with pytest.raises(ClusteringError):
            kmeans_fit(np.zeros((3, 2)), 4)

    def test_duplicate_points(self):
        X = np.vstack([np.zeros((5, 2)), np.ones((5, 2))])
        m = kmeans_fit(X, 3, seed=0)
        assert np.all((m.assignments >= 0) & (m.assignments < 3))


class TestBirch:
    def test_far_blobs(self):
        X, y = gaussian_blobs([[0, 0], [50, 50]], 25, 1.0)
        m = birch_fit(X, 2)
        assert adjusted_rand_score(y, m.assignments) == 1.0

    def test_k_one(self):
        X = np.random.default_rng(0).normal(size=(40, 3))
        m = birch_fit(X, 1)
        assert np.all(m.assignments == 0)
        np.testing.assert_allclose(m.centroids[0], X.mean(axis=0))

    @pytest.mark.parametrize("seed", range(5))
    def test_three_blobs_ari(self, seed):
        X, y = gaussian_blobs([[0, 0], [8, 0], [4, 7]], 10, 1.0, seed=seed)
        m = birch_fit(X, 3)
        assert adjusted_rand_score(y, m.assignments) >= 0.9

    def test_assignments_match_nearest_centroid(self):
        X = np.random.default_rng(4).normal(size=(120, 2))
        m = birch_fit(X, 6)
        np.testing.assert_array_equal(assign(m, X), m.assignments)

    def test_cf_tree_conserves_mass(self):
        X = np.random.default_rng(5).normal(size=(300, 2))
        tree = CFTree(threshold=0.2, branching=5)
        for x in X:
            tree.insert(x)
        entries = tree.leaf_entries()
        assert sum(e.n for e in entries) == 300
        np.testing.assert_allclose(sum(e.ls for e in entries), X.sum(axis=0))

    def test_ward_merge_count(self):
        C = np.array([[0.0], [1.0], [10.0], [11.0]])
        labels = ward_merge(C, np.array([1, 1, 1, 1]), 2)
        assert len(set(labels.tolist())) == 2
        assert labels[0] == labels[1] and labels[2] == labels[3]


class TestAssign:
    def test_tie_goes_to_lowest_id(self):
        C = np.array([[9.0, 9.0], [8.0, 8.0], [1.0, 0.0], [7.0, 7.0], [6.0, 6.0], [-1.0, 0.0]])
        m = ClusterModel("kmeans", C, np.zeros(0, dtype=np.int64))
        assert assign(m, np.array([[0.0, 0.0]]))[0] == 2

    def test_dimension_mismatch(self):
        m = ClusterModel("kmeans", np.zeros((2, 2)), np.zeros(0, dtype=np.int64))
        with pytest.raises(ClusteringError):
            assign(m, np.zeros((1, 3)))

    def test_fit_requires_k(self):
        with pytest.raises(ClusteringError):
            fit(np.zeros((4, 2)), {"method": "kmeans", "k": None})

    def test_model_roundtrip(self, tmp_path):
        X = np.random.default_rng(0).normal(size=(50, 2))
        m = kmeans_fit(X, 3)
        back = load_model(save_model(m, tmp_path))
        assert back.centroids.tobytes() == m.centroids.tobytes()
        np.testing.assert_array_equal(back.assignments, m.assignments)
        np.testing.assert_array_equal(assign(back, X), m.assignments)
