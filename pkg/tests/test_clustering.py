import numpy as np
import pytest

from rxnprompt.clustering import KMeans, load_kmeans, project_2d, save_kmeans
from rxnprompt.embedding import EncodingMethod
from rxnprompt.errors import DataError

from _oracles import brute_force_kmeans_inertia


class TestKMeansBasics:
    def test_two_points_two_clusters(self):
        model = KMeans(n_clusters=2, seed=0).fit([[0.0, 0.0], [10.0, 10.0]])
        centers = sorted(model.cluster_centers_.tolist())
        assert centers == [[0.0, 0.0], [10.0, 10.0]]
        assert model.inertia_ == 0.0

    def test_k_equals_n_distinct_points(self):
        points = [[0.0], [1.0], [5.0], [9.0]]
        model = KMeans(n_clusters=4, seed=3).fit(points)
        assert model.inertia_ == 0.0
        assert sorted(model.labels_.tolist()) == [0, 1, 2, 3]

    def test_two_triads_match_brute_force(self):
        points = np.array(
            [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]]
        )
        model = KMeans(n_clusters=2, seed=1).fit(points)
        oracle = brute_force_kmeans_inertia(points, 2)
        assert model.inertia_ == pytest.approx(oracle, rel=1e-9)
        assert len(set(model.labels_[:3])) == 1 and len(set(model.labels_[3:])) == 1

    def test_fewer_points_than_k(self):
        with pytest.raises(DataError, match="at least"):
            KMeans(n_clusters=3).fit([[0.0], [1.0]])

    def test_predict_matches_fit_labels(self):
        rng = np.random.default_rng(5)
        points = rng.normal(size=(40, 3))
        model = KMeans(n_clusters=4, seed=9).fit(points)
        assert np.array_equal(model.predict(points), model.labels_)

    def test_predict_tie_goes_to_lowest_index(self):
        model = KMeans(n_clusters=2, seed=0)
        model.cluster_centers_ = np.array([[0.0], [2.0]])
        model.n_features_in_ = 1
        assert model.predict([[1.0]]).tolist() == [0]
        assert model.predict([[2.0]]).tolist() == [1]

    def test_predict_dim_mismatch(self):
        model = KMeans(n_clusters=2, seed=0).fit([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DataError, match="mismatch"):
            model.predict([[1.0, 2.0, 3.0]])

    def test_determinism(self):
        rng = np.random.default_rng(11)
        points = rng.normal(size=(60, 4))
        a = KMeans(n_clusters=5, seed=123).fit(points)
        b = KMeans(n_clusters=5, seed=123).fit(points)
        assert np.array_equal(a.labels_, b.labels_)
        assert np.array_equal(a.cluster_centers_, b.cluster_centers_)


class TestKMeansProperties:
    def test_inertia_history_non_increasing(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(200, 6))
        model = KMeans(n_clusters=6, seed=0).fit(points)
        history = model.inertia_history_
        assert all(later <= earlier + 1e-9 for earlier, later in zip(history, history[1:]))

    def test_permutation_equivariance_of_partition(self):
        rng = np.random.default_rng(8)
        blobs = np.concatenate(
            [rng.normal(loc=c, scale=0.2, size=(20, 3)) for c in (0.0, 5.0, 10.0)]
        )
        model_a = KMeans(n_clusters=3, seed=4).fit(blobs)
        perm = rng.permutation(len(blobs))
        model_b = KMeans(n_clusters=3, seed=4).fit(blobs[perm])

        def partition(labels, order):
            groups = {}
            for pos, lab in zip(order, labels):
                groups.setdefault(lab, set()).add(pos)
            return {frozenset(g) for g in groups.values()}

        assert partition(model_a.labels_, range(len(blobs))) == partition(
            model_b.labels_, perm
        )

    def test_micro_instances_near_optimal(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            n = int(rng.integers(4, 9))
            k = int(rng.integers(2, 4))
            points = rng.normal(size=(n, 2))
            best = min(
                KMeans(n_clusters=k, seed=s).fit(points).inertia_ for s in range(20)
            )
            oracle = brute_force_kmeans_inertia(points, k)
            assert best <= 1.05 * oracle + 1e-12


class TestKMNSFormat:
    def test_round_trip(self, tmp_path):
        points = np.random.default_rng(0).normal(size=(30, 5))
        model = KMeans(n_clusters=3, seed=77, encoding=EncodingMethod.CONCAT).fit(points)
        path = tmp_path / "m.kmns"
        save_kmeans(model, path)
        raw = path.read_bytes()
        assert raw[:4] == b"KMNS"
        loaded = load_kmeans(path)
        assert loaded.n_clusters == 3
        assert loaded.seed == 77
        assert loaded.encoding is EncodingMethod.CONCAT
        assert np.allclose(loaded.cluster_centers_, model.cluster_centers_, atol=1e-6)
        assert np.array_equal(loaded.predict(points), model.predict(points))


class TestProject2d:
    def test_identical_points_to_zero(self):
        coords = project_2d(np.ones((5, 4)), seed=0)
        assert np.allclose(coords, 0.0)

    def test_collinear_data_second_axis_zero(self):
        rng = np.random.default_rng(3)
        direction = rng.normal(size=5)
        points = np.outer(rng.normal(size=30), direction)
        coords = project_2d(points, seed=1)
        assert np.max(np.abs(coords[:, 1])) < 1e-6

    def test_2d_input_preserves_distances(self):
        rng = np.random.default_rng(17)
        points = rng.normal(size=(40, 2)) * np.array([3.0, 1.0])
        coords = project_2d(points, seed=2)
        original = np.linalg.norm(points[:, None] - points[None, :], axis=-1)
        projected = np.linalg.norm(coords[:, None] - coords[None, :], axis=-1)
        assert np.max(np.abs(original - projected)) < 1e-6

    def test_needs_two_points(self):
        with pytest.raises(DataError, match="at least 2"):
            project_2d(np.ones((1, 3)), seed=0)
