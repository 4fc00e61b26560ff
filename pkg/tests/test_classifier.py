import numpy as np
import pytest

from rxnprompt.classifier import (
    SoftmaxClassifier,
    accuracy,
    classifier_fingerprint,
    cross_entropy_loss_and_grad,
    load_classifier,
    save_classifier,
)
from rxnprompt.errors import DataError


def blobs(n_per_class, centers, scale, seed):
    rng = np.random.default_rng(seed)
    X = np.concatenate(
        [rng.normal(loc=c, scale=scale, size=(n_per_class, len(c))) for c in centers]
    )
    y = np.repeat(np.arange(len(centers)), n_per_class)
    return X, y


class TestFit:
    def test_separable_blobs_high_accuracy(self):
        X, y = blobs(60, [(0.0, 0.0), (6.0, 6.0)], scale=0.3, seed=0)
        model = SoftmaxClassifier(n_classes=2, epochs=30, seed=1).fit(X, y)
        assert model.training_meta_.final_train_accuracy >= 0.99

    def test_single_class_labels(self):
        X, _ = blobs(30, [(0.0,)], scale=1.0, seed=2)
        y = np.ones(len(X), dtype=int)
        model = SoftmaxClassifier(n_classes=2, epochs=10, seed=0).fit(X, y)
        assert set(model.predict(X)) == {1}

    def test_zero_epochs_is_uniform_prediction(self):
        X, y = blobs(50, [(0.0, 1.0), (1.0, 0.0), (2.0, 2.0)], scale=0.5, seed=3)
        model = SoftmaxClassifier(n_classes=3, epochs=0, seed=0).fit(X, y)
        proba = model.predict_proba(X)
        assert np.allclose(proba, 1.0 / 3.0)
        assert set(model.predict(X)) == {0}
        assert abs(accuracy(model, X, y) - 1.0 / 3.0) <= 0.1

    def test_label_out_of_range(self):
        with pytest.raises(DataError, match="labels must lie"):
            SoftmaxClassifier(n_classes=2).fit([[0.0]], [5])

    def test_empty_inputs(self):
        with pytest.raises(DataError):
            SoftmaxClassifier(n_classes=2).fit(np.empty((0, 3)), [])

    def test_deterministic(self):
        X, y = blobs(40, [(0.0, 0.0), (2.0, 2.0)], scale=0.8, seed=4)
        a = SoftmaxClassifier(n_classes=2, epochs=15, seed=9).fit(X, y)
        b = SoftmaxClassifier(n_classes=2, epochs=15, seed=9).fit(X, y)
        assert np.array_equal(a.coef_, b.coef_)
        assert np.array_equal(a.intercept_, b.intercept_)


class TestAccuracy:
    def test_hand_built_weights_on_fixed_points(self):
        # scores = X @ W.T + b; argmax computed by hand for three points
        model = SoftmaxClassifier(n_classes=3)
        model.coef_ = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
        model.intercept_ = np.zeros(3)
        X = np.array([[2.0, 0.0], [0.0, 2.0], [-3.0, -3.0]])
        # scores: [2,0,-2] -> 0; [0,2,-2] -> 1; [-3,-3,6] -> 2
        assert model.predict(X).tolist() == [0, 1, 2]
        assert accuracy(model, X, [0, 1, 2]) == 1.0
        assert accuracy(model, X, [1, 1, 2]) == pytest.approx(2.0 / 3.0)

    def test_complemented_labels(self):
        X, y = blobs(40, [(0.0, 0.0), (4.0, 4.0)], scale=0.3, seed=5)
        model = SoftmaxClassifier(n_classes=2, epochs=25, seed=0).fit(X, y)
        assert accuracy(model, X, y) + accuracy(model, X, 1 - y) == pytest.approx(1.0)

    def test_length_mismatch(self):
        model = SoftmaxClassifier(n_classes=2)
        model.coef_ = np.zeros((2, 1))
        model.intercept_ = np.zeros(2)
        with pytest.raises(DataError, match="mismatch"):
            accuracy(model, [[1.0], [2.0]], [0])


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(8):
            n, dim, k = int(rng.integers(3, 9)), int(rng.integers(2, 5)), int(rng.integers(2, 4))
            X = rng.normal(size=(n, dim))
            y = rng.integers(0, k, size=n)
            W = rng.normal(size=(k, dim)) * 0.5
            b = rng.normal(size=k) * 0.5
            l2 = float(rng.choice([0.0, 0.01]))
            _, dW, db = cross_entropy_loss_and_grad(W, b, X, y, l2)
            eps = 1e-6
            for idx in np.ndindex(W.shape):
                W_plus, W_minus = W.copy(), W.copy()
                W_plus[idx] += eps
                W_minus[idx] -= eps
                lp, _, _ = cross_entropy_loss_and_grad(W_plus, b, X, y, l2)
                lm, _, _ = cross_entropy_loss_and_grad(W_minus, b, X, y, l2)
                numeric = (lp - lm) / (2 * eps)
                denom = max(abs(numeric), abs(dW[idx]), 1e-8)
                assert abs(numeric - dW[idx]) / denom < 1e-4
            for j in range(k):
                b_plus, b_minus = b.copy(), b.copy()
                b_plus[j] += eps
                b_minus[j] -= eps
                lp, _, _ = cross_entropy_loss_and_grad(W, b_plus, X, y, l2)
                lm, _, _ = cross_entropy_loss_and_grad(W, b_minus, X, y, l2)
                numeric = (lp - lm) / (2 * eps)
                denom = max(abs(numeric), abs(db[j]), 1e-8)
                assert abs(numeric - db[j]) / denom < 1e-4


class TestSerialization:
    def test_rtcl_round_trip(self, tmp_path):
        X, y = blobs(30, [(0.0, 0.0, 1.0), (3.0, 3.0, 0.0)], scale=0.4, seed=6)
        model = SoftmaxClassifier(n_classes=2, epochs=10, seed=2).fit(X, y)
        path = tmp_path / "m.rtcl"
        save_classifier(model, path)
        assert path.read_bytes()[:4] == b"RTCL"
        loaded = load_classifier(path)
        assert np.array_equal(loaded.predict(X), model.predict(X))
        assert loaded.coef_.shape == model.coef_.shape

    def test_fingerprint_is_16_hex(self, tmp_path):
        X, y = blobs(20, [(0.0,), (2.0,)], scale=0.2, seed=7)
        model = SoftmaxClassifier(n_classes=2, epochs=5, seed=1).fit(X, y)
        path = tmp_path / "m.rtcl"
        save_classifier(model, path)
        fp = classifier_fingerprint(path)
        assert len(fp) == 16 and int(fp, 16) >= 0
        assert classifier_fingerprint(path) == fp
