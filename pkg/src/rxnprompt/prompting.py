"""Instruction template library, adaptive selection and prompt fusion."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .curation import CuratedDataset
from .embedding import embed_templates, record_key
from .errors import DataError
from .records import TaskType


@dataclass
class TemplateLibrary:
    """Per-task instruction template lists; the default ships 12 per task."""

    templates: dict[TaskType, list[str]]

    def for_task(self, task: TaskType) -> list[str]:
        items = self.templates.get(task, [])
        if not items:
            raise DataError(f"no templates for task {task.value!r}")
        return items

    def validate(self) -> None:
        for task, items in self.templates.items():
            if not items:
                raise DataError(f"no templates for task {task.value!r}")
            if any(not t.strip() for t in items):
                raise DataError(f"empty template under task {task.value!r}")
            if len(set(items)) != len(items):
                raise DataError(f"duplicate templates under task {task.value!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateLibrary":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed template library: {exc}") from None
        lib = cls(
            templates={TaskType.parse(task): list(items) for task, items in raw.items()}
        )
        lib.validate()
        return lib

    @classmethod
    def default(cls) -> "TemplateLibrary":
        raw = json.loads(
            resources.files("rxnprompt").joinpath("data/templates.json").read_text("utf-8")
        )
        lib = cls(
            templates={TaskType.parse(task): list(items) for task, items in raw.items()}
        )
        lib.validate()
        return lib

    def save(self, path: str | Path) -> None:
        obj = {task.value: items for task, items in self.templates.items()}
        Path(path).write_text(
            json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )


def adaptability(input_vec: np.ndarray, instruction_vec: np.ndarray) -> float:
    """Negative Euclidean distance; 0 iff the vectors coincide."""
    input_vec = np.asarray(input_vec, dtype=np.float64)
    instruction_vec = np.asarray(instruction_vec, dtype=np.float64)
    if input_vec.shape != instruction_vec.shape:
        raise DataError(
            f"dimension mismatch: {input_vec.shape} vs {instruction_vec.shape}"
        )
    return -float(np.linalg.norm(input_vec - instruction_vec))


class InstructionSelector:
    """Adaptive selector with per-task template embeddings cached once."""

    def __init__(self, library: TemplateLibrary, provider):
        self.library = library
        self.provider = provider
        self._cache: dict[TaskType, np.ndarray] = {}

    def _template_matrix(self, task: TaskType) -> np.ndarray:
        if task not in self._cache:
            templates = self.library.for_task(task)
            self._cache[task] = embed_templates(self.provider, task.value, templates)
        return self._cache[task]

    def select(self, input_vec: np.ndarray, task: TaskType) -> tuple[int, str]:
        """Template with maximum adaptability; ties go to the lowest index."""
        matrix = self._template_matrix(task)
        input_vec = np.asarray(input_vec, dtype=np.float64)
        if matrix.shape[1] != input_vec.shape[0]:
            raise DataError(
                f"dimension mismatch: input {input_vec.shape[0]}, "
                f"templates {matrix.shape[1]}"
            )
        distances = np.linalg.norm(matrix - input_vec[None, :], axis=1)
        index = int(np.argmin(distances))
        return index, self.library.for_task(task)[index]


def select_instruction(
    input_vec: np.ndarray, task: TaskType, library: TemplateLibrary, provider
) -> tuple[int, str]:
    """One-shot adaptive selection (embeds the task's templates each call)."""
    return InstructionSelector(library, provider).select(input_vec, task)


RT_TAG = "Reaction type: "
INPUT_TAG = "input: "


@dataclass
class EnhancedPrompt:
    instruction: str
    rt: int
    rendered: str


def fuse(instruction: str, rt: int, input_text: str) -> EnhancedPrompt:
    """Fuse instruction, RT prior and input into the final prompt.

    Layout (one field per line, recoverable by the tags):
        <instruction>\\nReaction type: <rt>\\ninput: <input>
    """
    if rt < 0:
        raise DataError(f"rt must be non-negative, got {rt}")
    rendered = f"{instruction}\n{RT_TAG}{rt}\n{INPUT_TAG}{input_text}"
    return EnhancedPrompt(instruction=instruction, rt=rt, rendered=rendered)


def unfuse(rendered: str) -> tuple[str, int, str]:
    """Recover (instruction, rt, input) from a fused prompt."""
    head, _, input_text = rendered.rpartition(f"\n{INPUT_TAG}")
    instruction, _, rt_text = head.rpartition(f"\n{RT_TAG}")
    if not instruction or not rt_text.isdigit():
        raise DataError("prompt does not follow the fused layout")
    return instruction, int(rt_text), input_text


@dataclass
class PromptedRow:
    id: str
    prompt: str
    reference: str


def build_prompted_dataset(
    curated: CuratedDataset,
    library: TemplateLibrary,
    provider,
    static_template: bool = False,
) -> list[PromptedRow]:
    """One enhanced prompt per curated record, reference = record output.

    ``static_template`` pins template index 0 per task (the fixed-prompt
    ablation baseline) instead of adaptive selection.
    """
    for rec in curated.records:
        if rec.rt is None:
            raise DataError(f"record {rec.id} has no rt label; curate first")
    selector = InstructionSelector(library, provider)
    rows: list[PromptedRow] = []
    if curated.records:
        if getattr(provider, "uses_keys", False):
            texts = [record_key(rec.id, "input") for rec in curated.records]
        else:
            texts = [rec.input for rec in curated.records]
        input_vecs = provider.embed(texts)
    else:
        input_vecs = []
    for rec, vec in zip(curated.records, input_vecs):
        if static_template:
            instruction = library.for_task(rec.task)[0]
        else:
            _, instruction = selector.select(np.asarray(vec, dtype=np.float64), rec.task)
        prompt = fuse(instruction, rec.rt, rec.input)
        rows.append(PromptedRow(id=rec.id, prompt=prompt.rendered, reference=rec.output))
    return rows


def save_prompted(rows: list[PromptedRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(
                json.dumps(
                    {"id": row.id, "prompt": row.prompt, "reference": row.reference},
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_prompted(path: str | Path) -> list[PromptedRow]:
    rows: list[PromptedRow] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rows.append(
                    PromptedRow(
                        id=str(obj["id"]),
                        prompt=str(obj["prompt"]),
                        reference=str(obj["reference"]),
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}: line {line_no}: bad prompted row: {exc}") from None
    return rows
