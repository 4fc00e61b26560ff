"""Export job: embed a dataset's inputs/outputs and the template library."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import build_encoder
from .store import write_store


class ExportError(RuntimeError):
    pass


@dataclass
class ExportJob:
    dataset: str
    templates: str
    encoder: str
    output: str
    pooling: str = "mean"
    batch_size: int = 32


def _read_dataset(path: Path) -> list[tuple[str, str, str]]:
    """(id, input, output) per line; missing ids default to the line index."""
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec_id = str(obj["id"]) if obj.get("id") is not None else str(line_no - 1)
                rows.append((rec_id, str(obj["input"]), str(obj["output"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ExportError(f"{path}: line {line_no}: bad record: {exc}") from None
    return rows


def _read_templates(path: Path) -> dict[str, list[str]]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ExportError(f"{path}: bad template library: {exc}") from None
    if not isinstance(raw, dict):
        raise ExportError(f"{path}: template library must map task -> list")
    return {str(task): [str(t) for t in items] for task, items in raw.items()}


def export(job: ExportJob) -> dict:
    """Run the encoder over every text and write the store; returns a summary.

    Store keys: '{record_id}:input', '{record_id}:output' and
    'template:{task}:{index}', exhaustively and uniquely.
    """
    dataset_path = Path(job.dataset)
    templates_path = Path(job.templates)
    if not dataset_path.exists():
        raise ExportError(f"dataset not found: {dataset_path}")
    if not templates_path.exists():
        raise ExportError(f"template library not found: {templates_path}")
    rows = _read_dataset(dataset_path)
    templates = _read_templates(templates_path)

    keys: list[str] = []
    texts: list[str] = []
    for rec_id, input_text, output_text in rows:
        keys.append(f"{rec_id}:input")
        texts.append(input_text)
        keys.append(f"{rec_id}:output")
        texts.append(output_text)
    for task, items in templates.items():
        for index, text in enumerate(items):
            keys.append(f"template:{task}:{index}")
            texts.append(text)
    if len(set(keys)) != len(keys):
        dupes = sorted({k for k in keys if keys.count(k) > 1})
        raise ExportError(f"duplicate store keys (duplicate record ids?): {dupes[:3]}")

    encoder = build_encoder(job.encoder, pooling=job.pooling)
    vectors: list[np.ndarray] = []
    for start in range(0, len(texts), job.batch_size):
        block = encoder.encode(texts[start : start + job.batch_size])
        vectors.extend(np.asarray(block, dtype=np.float32))
    entries = dict(zip(keys, vectors))
    try:
        write_store(job.output, encoder.dim, entries)
    except OSError as exc:
        raise ExportError(f"cannot write store {job.output}: {exc}") from None
    return {
        "output": str(job.output),
        "dim": encoder.dim,
        "entries": len(entries),
        "records": len(rows),
        "templates": sum(len(v) for v in templates.values()),
    }
