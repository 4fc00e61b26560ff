"""Reaction dataset model: records, JSONL ingestion and the 98:1:1 split."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataError


class TaskType(enum.Enum):
    FORWARD = "forward"
    RETROSYNTHESIS = "retrosynthesis"
    REAGENT = "reagent"

    @classmethod
    def parse(cls, value: str) -> "TaskType":
        try:
            return cls(value)
        except ValueError:
            raise DataError(f"unknown task value: {value!r}") from None


@dataclass
class ReactionRecord:
    """One dataset row: instruction text plus input/output compound strings.

    ``input`` and ``output`` hold one or more SMILES compounds joined by '.'.
    ``rt`` is the optional reaction-type label in 0..n_classes-1.
    """

    id: str
    task: TaskType
    instruction: str
    input: str
    output: str
    rt: int | None = None

    def with_rt(self, rt: int) -> "ReactionRecord":
        return replace(self, rt=rt)


@dataclass
class DatasetSplit:
    train: list[ReactionRecord]
    valid: list[ReactionRecord]
    test: list[ReactionRecord]
    provenance: str = ""

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.valid), len(self.test))


def _record_from_obj(obj: dict, line_no: int) -> ReactionRecord:
    for key in ("task", "instruction", "input", "output"):
        if key not in obj:
            raise DataError(f"line {line_no}: missing field {key!r}")
    rec_id = str(obj["id"]) if "id" in obj and obj["id"] is not None else str(line_no - 1)
    rt = obj.get("rt")
    if rt is not None:
        rt = int(rt)
        if rt < 0:
            raise DataError(f"line {line_no}: rt must be non-negative, got {rt}")
    try:
        task = TaskType.parse(str(obj["task"]))
    except DataError as exc:
        raise DataError(f"line {line_no}: {exc}") from None
    rec = ReactionRecord(
        id=rec_id,
        task=task,
        instruction=str(obj["instruction"]),
        input=str(obj["input"]).strip(),
        output=str(obj["output"]).strip(),
        rt=rt,
    )
    if not rec.input or not rec.output:
        raise DataError(f"line {line_no}: input and output must be non-empty")
    return rec


def load_dataset(path: str | Path, format: str = "jsonl") -> list[ReactionRecord]:
    """Load a line-delimited JSON dataset, preserving file order.

    Records without an ``id`` get their zero-based line index as id.
    Raises DataError naming the offending line for malformed content.
    """
    if format != "jsonl":
        raise DataError(f"unsupported dataset format: {format!r}")
    path = Path(path)
    records: list[ReactionRecord] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed record: {exc}") from None
            if not isinstance(obj, dict):
                raise DataError(f"line {line_no}: expected an object, got {type(obj).__name__}")
            try:
                rec = _record_from_obj(obj, line_no)
            except DataError:
                raise
            if rec.id in seen_ids:
                raise DataError(f"line {line_no}: duplicate id {rec.id!r}")
            seen_ids.add(rec.id)
            records.append(rec)
    return records


def save_dataset(records: list[ReactionRecord], path: str | Path) -> None:
    """Write records as one JSON object per line, stable key order."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "id": rec.id,
                "task": rec.task.value,
                "instruction": rec.instruction,
                "input": rec.input,
                "output": rec.output,
            }
            if rec.rt is not None:
                obj["rt"] = rec.rt
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def clean_dataset(
    records: list[ReactionRecord],
) -> tuple[list[ReactionRecord], list[tuple[str, str]]]:
    """Drop records whose input or output fails SMILES validation.

    Returns (kept, dropped) where dropped pairs each record id with the
    first validation failure found among its '.'-separated compounds.
    """
    from .smiles import validate

    kept: list[ReactionRecord] = []
    dropped: list[tuple[str, str]] = []
    for rec in records:
        reason = None
        for fieldname, text in (("input", rec.input), ("output", rec.output)):
            for idx, compound in enumerate(text.split(".")):
                result = validate(compound)
                if not result.valid:
                    reason = f"{fieldname} compound {idx}: {result.reason}"
                    break
            if reason:
                break
        if reason is None:
            kept.append(rec)
        else:
            dropped.append((rec.id, reason))
    return kept, dropped


def split_indices_98_1_1(n: int, seed: int) -> tuple[list[int], list[int], list[int]]:
    """Index permutation split for the 98:1:1 rule.

    Sizes: valid and test get floor(n/100) each, train gets floor(98n/100);
    of the n mod 100 leftover indices, the first goes to test and the
    second to valid, so every part stays within one record of its exact
    proportion.
    """
    if n < 100:
        raise DataError(f"need at least 100 records to split 98:1:1, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_valid = n // 100
    n_test = n // 100
    n_train = (98 * n) // 100
    leftover = n - n_train - n_valid - n_test
    if leftover >= 1:
        n_test += 1
    if leftover >= 2:
        n_valid += 1
    return (
        order[:n_train],
        order[n_train : n_train + n_valid],
        order[n_train + n_valid :],
    )


def split_98_1_1(records: list[ReactionRecord], seed: int) -> DatasetSplit:
    """Deterministic random 98:1:1 split of a record list."""
    train_idx, valid_idx, test_idx = split_indices_98_1_1(len(records), seed)
    return DatasetSplit(
        train=[records[i] for i in train_idx],
        valid=[records[i] for i in valid_idx],
        test=[records[i] for i in test_idx],
        provenance=f"uniform random 98:1:1, seed={seed}, n={len(records)}",
    )
