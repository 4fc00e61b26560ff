"""Dataset annotation with a frozen classifier, plus the RT prompt text."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import SoftmaxClassifier
from .embedding import embed_record_field
from .errors import DataError
from .records import ReactionRecord, TaskType

log = logging.getLogger(__name__)


@dataclass
class CuratedDataset:
    records: list[ReactionRecord]
    source: str
    model_fingerprint: str
    n_classes: int
    overwritten: int = 0

    def class_histogram(self) -> list[int]:
        counts = [0] * self.n_classes
        for rec in self.records:
            counts[rec.rt] += 1
        return counts


def annotate_dataset(
    records: list[ReactionRecord],
    provider,
    model: SoftmaxClassifier,
    source: str = "",
    model_fingerprint: str = "",
) -> CuratedDataset:
    """Set every record's rt to the classifier's argmax on its input.

    Pre-existing rt values are overwritten; the count is logged and kept
    on the result for auditing.
    """
    n_classes = model.coef_.shape[0]
    if not records:
        return CuratedDataset(
            records=[], source=source, model_fingerprint=model_fingerprint,
            n_classes=n_classes,
        )
    inputs = embed_record_field(provider, records, "input")
    if inputs.shape[1] != model.coef_.shape[1]:
        raise DataError(
            f"provider dim {inputs.shape[1]} does not match "
            f"classifier input dim {model.coef_.shape[1]}"
        )
    labels = model.predict(inputs)
    overwritten = sum(1 for rec in records if rec.rt is not None)
    if overwritten:
        log.warning("overwriting %d pre-existing rt labels", overwritten)
    curated = [rec.with_rt(int(labels[i])) for i, rec in enumerate(records)]
    dataset = CuratedDataset(
        records=curated,
        source=source,
        model_fingerprint=model_fingerprint,
        n_classes=n_classes,
        overwritten=overwritten,
    )
    histogram = dataset.class_histogram()
    if 0 in histogram:
        log.warning("annotation left empty classes: %s", histogram)
    return dataset


_RT_PROMPT = (
    "This is the {task} reaction prediction task, where the goal is to "
    "determine the type of chemical reaction based on the given compounds, "
    "categorized as 0 through {cluster_number}.\n"
    "input: {input}"
)


def render_rt_prompt(task: TaskType, n_classes: int, input_text: str) -> str:
    """Annotation prompt; the cluster_number slot carries the top label N-1."""
    if n_classes < 2:
        raise DataError(f"need at least 2 classes, got {n_classes}")
    return _RT_PROMPT.format(
        task=task.value, cluster_number=n_classes - 1, input=input_text
    )


def write_sidecar(dataset: CuratedDataset, dataset_path: str | Path) -> Path:
    """Write the metadata JSON next to a curated dataset file."""
    path = Path(str(dataset_path) + ".meta.json")
    meta = {
        "model_fingerprint": dataset.model_fingerprint,
        "n_classes": dataset.n_classes,
        "source": dataset.source,
        "records": len(dataset.records),
        "overwritten": dataset.overwritten,
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
