"""Self-feedback elicitation: cluster, train, re-annotate, sweep, select.

For every (encoding, cluster count) grid cell the records' composed
embeddings are clustered into pseudo reaction types, a linear classifier
is trained on input embeddings against those labels, and the labels are
re-annotated from the classifier's predictions for a bounded number of
feedback rounds. The sweep then balances annotation accuracy against the
cluster count via an accuracy floor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classifier import SoftmaxClassifier, accuracy as classifier_accuracy
from .clustering import KMeans
from .embedding import EncodingMethod, embed_record_field, encoding_order
from .errors import DataError, RxnPromptError
from .records import ReactionRecord, split_indices_98_1_1

log = logging.getLogger(__name__)

# Spacing between per-round derived seeds; any constant works, it only
# has to keep rounds decorrelated while staying deterministic.
_ROUND_SEED_STRIDE = 1_000_003


@dataclass
class SweepPolicy:
    """Knobs shared by every sweep cell.

    Sweep rows default to a single feedback round: row accuracy then
    measures how well input embeddings predict the cluster labels, which
    is what discriminates encodings and cluster counts. Further rounds
    re-annotate with classifier predictions and converge toward
    self-consistency for every cell, erasing the signal the sweep needs.
    """

    rounds_max: int = 1
    min_gain: float = 0.005
    accuracy_floor: float = 0.70
    epochs: int = 30
    lr: float = 0.05
    batch_size: int = 128
    l2: float = 0.0
    normalize: bool = False
    kmeans_restarts: int = 10


@dataclass
class SweepRow:
    encoding: EncodingMethod
    n: int
    accuracy: float
    feedback_rounds: int
    failed: bool = False
    error: str = ""

    def to_dict(self) -> dict:
        return {
            "encoding": self.encoding.value,
            "n": self.n,
            "accuracy": self.accuracy,
            "feedback_rounds": self.feedback_rounds,
            "failed": self.failed,
            "error": self.error,
        }


@dataclass
class SweepReport:
    rows: list[SweepRow]
    best: SweepRow
    seed: int
    accuracy_floor: float

    def to_dict(self) -> dict:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "best": self.best.to_dict(),
            "seed": self.seed,
            "accuracy_floor": self.accuracy_floor,
        }


@dataclass
class SelfFeedbackResult:
    labels: np.ndarray
    model: SoftmaxClassifier
    accuracy: float
    rounds_used: int
    accuracy_history: list[float] = field(default_factory=list)
    valid_accuracy_history: list[float] = field(default_factory=list)
    cluster_model: KMeans | None = None


def composed_matrix(
    method: EncodingMethod, input_mat: np.ndarray, output_mat: np.ndarray
) -> np.ndarray:
    """Row-wise composition of the input/output embedding matrices."""
    if input_mat.shape != output_mat.shape:
        raise DataError(
            f"embedding matrices differ in shape: {input_mat.shape} vs {output_mat.shape}"
        )
    if method is EncodingMethod.OUTPUT_ONLY:
        return output_mat.copy()
    if method is EncodingMethod.OUTPUT_MINUS_INPUT:
        return output_mat - input_mat
    if method is EncodingMethod.CONCAT:
        return np.hstack([input_mat, output_mat])
    return input_mat * output_mat


def _maybe_normalize(points: np.ndarray, normalize: bool) -> np.ndarray:
    if not normalize:
        return points
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return points / norms


def corpus_embeddings(provider, records: list[ReactionRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(input matrix, output matrix) for a record list, computed once."""
    if not records:
        raise DataError("no records to embed")
    return (
        embed_record_field(provider, records, "input"),
        embed_record_field(provider, records, "output"),
    )


def annotate_by_cluster(
    records: list[ReactionRecord],
    provider,
    method: EncodingMethod,
    n: int,
    seed: int,
    normalize: bool = False,
    restarts: int = 10,
    _vectors: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, KMeans]:
    """Cluster composed input/output embeddings into n pseudo-labels."""
    input_mat, output_mat = _vectors if _vectors is not None else corpus_embeddings(
        provider, records
    )
    points = _maybe_normalize(composed_matrix(method, input_mat, output_mat), normalize)
    model = KMeans(n_clusters=n, seed=seed, n_init=restarts, encoding=method).fit(points)
    return model.labels_, model


def train_rt_classifier(
    inputs: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    seed: int = 0,
    epochs: int = 30,
    lr: float = 0.05,
    batch_size: int = 128,
    l2: float = 0.0,
) -> SoftmaxClassifier:
    """Fit the reaction-type classifier on input embeddings."""
    model = SoftmaxClassifier(
        n_classes=n_classes, epochs=epochs, lr=lr, batch_size=batch_size, seed=seed, l2=l2
    )
    return model.fit(inputs, labels)


def self_feedback_round(
    records: list[ReactionRecord],
    provider,
    method: EncodingMethod,
    n: int,
    seed: int,
    rounds_max: int = 3,
    min_gain: float = 0.005,
    policy: SweepPolicy | None = None,
    _vectors: tuple[np.ndarray, np.ndarray] | None = None,
) -> SelfFeedbackResult:
    """Cluster once, then iterate train / evaluate / re-annotate.

    Each round splits the records 98:1:1, trains on the large part,
    reports held-out test accuracy (validation accuracy is logged), and
    re-annotates every record with the classifier's predictions. The loop
    stops once the accuracy gain over the previous round falls below
    ``min_gain`` (the first round is measured against zero) or after
    ``rounds_max`` rounds.
    """
    policy = policy or SweepPolicy(rounds_max=rounds_max, min_gain=min_gain)
    input_mat, output_mat = _vectors if _vectors is not None else corpus_embeddings(
        provider, records
    )
    labels, cluster_model = annotate_by_cluster(
        records, provider, method, n, seed,
        normalize=policy.normalize, restarts=policy.kmeans_restarts,
        _vectors=(input_mat, output_mat),
    )

    model: SoftmaxClassifier | None = None
    acc_prev = 0.0
    acc = 0.0
    rounds_used = 0
    history: list[float] = []
    valid_history: list[float] = []
    for round_no in range(1, max(1, rounds_max) + 1):
        round_seed = seed + _ROUND_SEED_STRIDE * round_no
        train_idx, valid_idx, test_idx = split_indices_98_1_1(len(records), round_seed)
        model = train_rt_classifier(
            input_mat[train_idx],
            labels[train_idx],
            n_classes=n,
            seed=round_seed,
            epochs=policy.epochs,
            lr=policy.lr,
            batch_size=policy.batch_size,
            l2=policy.l2,
        )
        acc = classifier_accuracy(model, input_mat[test_idx], labels[test_idx])
        valid_acc = classifier_accuracy(model, input_mat[valid_idx], labels[valid_idx])
        history.append(acc)
        valid_history.append(valid_acc)
        log.info(
            "self-feedback round %d: test accuracy %.4f, valid accuracy %.4f",
            round_no, acc, valid_acc,
        )
        labels = model.predict(input_mat)
        rounds_used = round_no
        if acc - acc_prev < min_gain:
            break
        acc_prev = acc
    assert model is not None
    return SelfFeedbackResult(
        labels=labels,
        model=model,
        accuracy=acc,
        rounds_used=rounds_used,
        accuracy_history=history,
        valid_accuracy_history=valid_history,
        cluster_model=cluster_model,
    )


def select_best(rows: list[SweepRow], accuracy_floor: float = 0.70) -> SweepRow:
    """Largest cluster count whose accuracy clears the floor.

    Ties on n go to the higher accuracy, then to the earlier encoding in
    the fixed order. Without any row above the floor the single
    highest-accuracy row wins (ties: larger n, then encoding order).
    Failed rows never win.
    """
    ok = [row for row in rows if not row.failed]
    if not ok:
        raise DataError("no successful sweep rows to select from")
    above = [row for row in ok if row.accuracy >= accuracy_floor]
    if above:
        return min(
            above, key=lambda r: (-r.n, -r.accuracy, encoding_order(r.encoding))
        )
    return min(ok, key=lambda r: (-r.accuracy, -r.n, encoding_order(r.encoding)))


def run_sweep(
    records: list[ReactionRecord],
    provider,
    encodings: list[EncodingMethod],
    n_range: tuple[int, int] = (3, 12),
    seed: int = 0,
    policy: SweepPolicy | None = None,
    _vectors: tuple[np.ndarray, np.ndarray] | None = None,
) -> SweepReport:
    """Evaluate every (encoding, n) cell and pick the best one.

    Cell failures are recorded on their row and excluded from selection;
    the grid itself is rejected when empty.
    """
    policy = policy or SweepPolicy()
    n_lo, n_hi = n_range
    if not encodings or n_lo > n_hi:
        raise DataError("empty sweep grid")
    vectors = _vectors if _vectors is not None else corpus_embeddings(provider, records)
    rows: list[SweepRow] = []
    for method in encodings:
        for n in range(n_lo, n_hi + 1):
            try:
                result = self_feedback_round(
                    records, provider, method, n, seed,
                    rounds_max=policy.rounds_max, min_gain=policy.min_gain,
                    policy=policy, _vectors=vectors,
                )
                rows.append(
                    SweepRow(
                        encoding=method,
                        n=n,
                        accuracy=result.accuracy,
                        feedback_rounds=result.rounds_used,
                    )
                )
            except RxnPromptError as exc:
                log.warning("sweep cell (%s, n=%d) failed: %s", method.value, n, exc)
                rows.append(
                    SweepRow(
                        encoding=method, n=n, accuracy=0.0, feedback_rounds=0,
                        failed=True, error=str(exc),
                    )
                )
    best = select_best(rows, policy.accuracy_floor)
    return SweepReport(rows=rows, best=best, seed=seed, accuracy_floor=policy.accuracy_floor)
