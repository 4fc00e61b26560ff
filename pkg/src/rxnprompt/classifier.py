"""Multinomial logistic classifier mapping input embeddings to RT labels."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import DataError
from .validation import as_float_matrix, as_label_array


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def cross_entropy_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus L2 term, with analytic gradients.

    weights is (n_classes, dim); returns (loss, d_weights, d_bias).
    """
    n = X.shape[0]
    probs = _softmax(X @ weights.T + bias)
    eps = 1e-12
    loss = float(-np.log(probs[np.arange(n), y] + eps).mean())
    loss += 0.5 * l2 * float((weights**2).sum())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    d_weights = delta.T @ X / n + l2 * weights
    d_bias = delta.mean(axis=0)
    return loss, d_weights, d_bias


@dataclass
class TrainingMeta:
    epochs_run: int
    final_train_accuracy: float
    seed: int


class SoftmaxClassifier(ClassifierMixin, BaseEstimator):
    """Linear softmax model trained by seeded mini-batch gradient descent.

    Weights initialize to zero, so an untrained model (epochs=0) predicts
    uniform probabilities and always argmaxes to class 0.
    """

    def __init__(
        self,
        n_classes: int = 2,
        epochs: int = 30,
        lr: float = 0.05,
        batch_size: int = 128,
        seed: int = 0,
        l2: float = 0.0,
    ):
        self.n_classes = n_classes
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.l2 = l2

    def fit(self, X, y) -> "SoftmaxClassifier":
        if self.n_classes < 2:
            raise DataError(f"need at least 2 classes, got {self.n_classes}")
        X = as_float_matrix(X, "inputs")
        y = as_label_array(y, self.n_classes, "labels")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"inputs/labels length mismatch: {X.shape[0]} != {y.shape[0]}")
        n, dim = X.shape
        weights = np.zeros((self.n_classes, dim), dtype=np.float64)
        bias = np.zeros(self.n_classes, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                _, d_w, d_b = cross_entropy_loss_and_grad(
                    weights, bias, X[idx], y[idx], self.l2
                )
                weights -= self.lr * d_w
                bias -= self.lr * d_b
        self.coef_ = weights
        self.intercept_ = bias
        self.n_features_in_ = dim
        train_acc = float((self._predict_fitted(X) == y).mean())
        self.training_meta_ = TrainingMeta(
            epochs_run=self.epochs, final_train_accuracy=train_acc, seed=self.seed
        )
        return self

    def _predict_fitted(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(X @ self.coef_.T + self.intercept_, axis=1)

    def decision_function(self, X) -> np.ndarray:
        X = as_float_matrix(X, "inputs")
        if X.shape[1] != self.coef_.shape[1]:
            raise DataError(
                f"dimension mismatch: inputs have {X.shape[1]}, model has {self.coef_.shape[1]}"
            )
        return X @ self.coef_.T + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def score(self, X, y) -> float:
        return accuracy(self, X, y)


def accuracy(model: SoftmaxClassifier, X, y) -> float:
    """Fraction of argmax predictions equal to the labels."""
    labels = np.asarray(y, dtype=np.int64).ravel()
    X = as_float_matrix(X, "inputs")
    if X.shape[0] != labels.shape[0]:
        raise DataError(
            f"inputs/labels length mismatch: {X.shape[0]} != {labels.shape[0]}"
        )
    return float((model.predict(X) == labels).mean())


RTCL_MAGIC = b"RTCL"
RTCL_VERSION = 1


def save_classifier(model: SoftmaxClassifier, path: str | Path) -> None:
    """Serialize: magic, version, n_classes, input_dim, weights, bias (f32 LE)."""
    weights = np.asarray(model.coef_, dtype="<f4")
    bias = np.asarray(model.intercept_, dtype="<f4")
    n_classes, dim = weights.shape
    with Path(path).open("wb") as fh:
        fh.write(RTCL_MAGIC)
        fh.write(struct.pack("<III", RTCL_VERSION, n_classes, dim))
        fh.write(weights.tobytes())
        fh.write(bias.tobytes())


def load_classifier(path: str | Path) -> SoftmaxClassifier:
    data = Path(path).read_bytes()
    if data[:4] != RTCL_MAGIC:
        raise DataError(f"{path}: not an RTCL model (bad magic)")
    version, n_classes, dim = struct.unpack_from("<III", data, 4)
    if version != RTCL_VERSION:
        raise DataError(f"{path}: unsupported RTCL version {version}")
    offset = 4 + 12
    weights = np.frombuffer(data, dtype="<f4", count=n_classes * dim, offset=offset)
    offset += 4 * n_classes * dim
    bias = np.frombuffer(data, dtype="<f4", count=n_classes, offset=offset)
    model = SoftmaxClassifier(n_classes=n_classes)
    model.coef_ = weights.reshape(n_classes, dim).astype(np.float64)
    model.intercept_ = bias.astype(np.float64)
    model.n_features_in_ = dim
    return model


def classifier_fingerprint(path: str | Path) -> str:
    """16-hex-char provenance hash of a serialized classifier file."""
    from .smiles.fingerprint import fnv1a_64

    return f"{fnv1a_64(Path(path).read_bytes()):016x}"
