"""The five evaluation metrics and the improvement ratio.

BLEU and METEOR work over SMILES-aware tokens; exact match compares
canonicalized compound multisets; similarity pools path fingerprints per
side; validity applies the valence checker. Every metric lands in [0,1].
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError, SmilesError
from .smiles import canonicalize_compound, fingerprint, parse, tanimoto, validate
from .smiles.fingerprint import Fingerprint
from .smiles.tokens import coarse_tokenize
from .validation import check_same_length

BLEU_MAX_ORDER = 4


def _ngrams(tokens: list[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def bleu(predictions: list[str], references: list[str]) -> float:
    """Corpus BLEU over 1..4-gram SMILES tokens with brevity penalty.

    Add-one smoothing applies only to higher orders (n >= 2) with a zero
    match count, so sharing no unigram at all still scores exactly 0.
    """
    check_same_length(predictions, references, "predictions/references")
    if not predictions:
        raise DataError("empty corpus")
    matches = [0] * (BLEU_MAX_ORDER + 1)
    totals = [0] * (BLEU_MAX_ORDER + 1)
    pred_len = 0
    ref_len = 0
    for pred, ref in zip(predictions, references):
        pred_tokens = coarse_tokenize(pred)
        ref_tokens = coarse_tokenize(ref)
        pred_len += len(pred_tokens)
        ref_len += len(ref_tokens)
        for order in range(1, BLEU_MAX_ORDER + 1):
            pred_counts = _ngrams(pred_tokens, order)
            ref_counts = _ngrams(ref_tokens, order)
            totals[order] += sum(pred_counts.values())
            matches[order] += sum(
                min(count, ref_counts[gram]) for gram, count in pred_counts.items()
            )
    if pred_len == 0:
        return 0.0
    log_sum = 0.0
    for order in range(1, BLEU_MAX_ORDER + 1):
        m, t = matches[order], totals[order]
        if order > 1 and m == 0:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
    geo_mean = math.exp(log_sum / BLEU_MAX_ORDER)
    brevity = 1.0 if pred_len > ref_len else math.exp(1.0 - ref_len / pred_len)
    return min(1.0, geo_mean * brevity)


def _greedy_alignment(pred: list[str], ref: list[str]) -> tuple[int, int]:
    """(matches, chunks) via greedy longest-common-fragment matching.

    Repeatedly fixes the longest contiguous run of equal tokens over the
    still-unmatched positions (leftmost in the prediction, then leftmost
    in the reference), so every matchable token is used and the chunk
    count is deterministically near-minimal.
    """
    pred_free = [True] * len(pred)
    ref_free = [True] * len(ref)
    matches = 0
    chunks = 0
    while True:
        best_len = 0
        best = None
        for i in range(len(pred)):
            if not pred_free[i]:
                continue
            for j in range(len(ref)):
                if not ref_free[j] or pred[i] != ref[j]:
                    continue
                length = 0
                while (
                    i + length < len(pred)
                    and j + length < len(ref)
                    and pred_free[i + length]
                    and ref_free[j + length]
                    and pred[i + length] == ref[j + length]
                ):
                    length += 1
                if length > best_len:
                    best_len = length
                    best = (i, j)
        if best is None:
            break
        i, j = best
        for off in range(best_len):
            pred_free[i + off] = False
            ref_free[j + off] = False
        matches += best_len
        chunks += 1
    return matches, chunks


def meteor(predictions: list[str], references: list[str]) -> float:
    """Mean per-pair METEOR: F_mean = 10PR/(R+9P), penalty 0.5(chunks/m)^3."""
    check_same_length(predictions, references, "predictions/references")
    if not predictions:
        raise DataError("empty corpus")
    total = 0.0
    for pred, ref in zip(predictions, references):
        pred_tokens = coarse_tokenize(pred)
        ref_tokens = coarse_tokenize(ref)
        if not pred_tokens or not ref_tokens:
            continue
        matches, chunks = _greedy_alignment(pred_tokens, ref_tokens)
        if matches == 0:
            continue
        precision = matches / len(pred_tokens)
        recall = matches / len(ref_tokens)
        f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
        penalty = 0.5 * (chunks / matches) ** 3
        total += f_mean * (1.0 - penalty)
    return total / len(predictions)


def _canonical_multiset(text: str) -> Counter:
    """Canonical compound multiset; invalid compounds stay as raw text."""
    parts = [part.strip() for part in text.strip().split(".")]
    out: Counter = Counter()
    for part in parts:
        try:
            out[canonicalize_compound(part)] += 1
        except SmilesError:
            out[part] += 1
    return out


def exact_match(predictions: list[str], references: list[str]) -> float:
    """Order-insensitive exact match over canonical compound multisets."""
    check_same_length(predictions, references, "predictions/references")
    if not predictions:
        raise DataError("empty corpus")
    hits = sum(
        1
        for pred, ref in zip(predictions, references)
        if _canonical_multiset(pred) == _canonical_multiset(ref)
    )
    return hits / len(predictions)


def _pooled_fingerprint(text: str) -> Fingerprint | None:
    """Union fingerprint over the valid compounds of one side, if any."""
    pooled: Fingerprint | None = None
    for part in text.strip().split("."):
        part = part.strip()
        if not part or not validate(part).valid:
            continue
        fp = fingerprint(parse(part))
        pooled = fp if pooled is None else pooled.union(fp)
    return pooled


def similarity(predictions: list[str], references: list[str]) -> float:
    """Mean Tanimoto between the pooled fingerprints of each pair.

    A pair with no valid compound on either side scores 0, except when
    both sides are entirely invalid yet string-equal (scored 1).
    """
    check_same_length(predictions, references, "predictions/references")
    if not predictions:
        raise DataError("empty corpus")
    total = 0.0
    for pred, ref in zip(predictions, references):
        fp_pred = _pooled_fingerprint(pred)
        fp_ref = _pooled_fingerprint(ref)
        if fp_pred is None and fp_ref is None:
            total += 1.0 if pred.strip() == ref.strip() else 0.0
        elif fp_pred is None or fp_ref is None:
            total += 0.0
        else:
            total += tanimoto(fp_pred, fp_ref)
    return total / len(predictions)


def validity(predictions: list[str]) -> float:
    """Fraction of predictions whose compounds all pass validation."""
    if not predictions:
        raise DataError("empty corpus")
    return sum(1 for pred in predictions if validate(pred).valid) / len(predictions)


def improvement(candidate_em: float, baseline_em: float) -> float:
    """Relative exact-match gain over a baseline."""
    if baseline_em <= 0.0:
        raise DataError(f"baseline exact match must be positive, got {baseline_em}")
    return (candidate_em - baseline_em) / baseline_em


@dataclass
class MetricScores:
    bleu: float
    meteor: float
    em: float
    similarity: float
    validity: float
    count: int
    improve: float | None = None

    def to_dict(self) -> dict:
        out = {
            "bleu": self.bleu,
            "meteor": self.meteor,
            "em": self.em,
            "similarity": self.similarity,
            "validity": self.validity,
            "count": self.count,
        }
        if self.improve is not None:
            out["improve"] = self.improve
        return out


@dataclass
class MetricReport:
    overall: MetricScores
    per_task: dict[str, MetricScores] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "per_task": {task: scores.to_dict() for task, scores in self.per_task.items()},
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "MetricReport":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))

        def scores(d: dict) -> MetricScores:
            return MetricScores(
                bleu=d["bleu"], meteor=d["meteor"], em=d["em"],
                similarity=d["similarity"], validity=d["validity"],
                count=d["count"], improve=d.get("improve"),
            )

        return cls(
            overall=scores(obj["overall"]),
            per_task={task: scores(d) for task, d in obj.get("per_task", {}).items()},
        )


def score_all(predictions: list[str], references: list[str]) -> MetricScores:
    """All five metrics over one aligned corpus."""
    return MetricScores(
        bleu=bleu(predictions, references),
        meteor=meteor(predictions, references),
        em=exact_match(predictions, references),
        similarity=similarity(predictions, references),
        validity=validity(predictions),
        count=len(predictions),
    )


def build_report(
    predictions: list[str],
    references: list[str],
    tasks: list[str] | None = None,
    baseline: MetricReport | None = None,
) -> MetricReport:
    """Overall plus per-task scores; EM-based improve when a baseline exists."""
    overall = score_all(predictions, references)
    per_task: dict[str, MetricScores] = {}
    if tasks is not None:
        check_same_length(predictions, tasks, "predictions/tasks")
        for task in sorted(set(tasks)):
            idx = [i for i, t in enumerate(tasks) if t == task]
            per_task[task] = score_all(
                [predictions[i] for i in idx], [references[i] for i in idx]
            )
    report = MetricReport(overall=overall, per_task=per_task)
    if baseline is not None:
        if baseline.overall.em > 0:
            report.overall.improve = improvement(overall.em, baseline.overall.em)
        for task, scores in report.per_task.items():
            base = baseline.per_task.get(task)
            if base is not None and base.em > 0:
                scores.improve = improvement(scores.em, base.em)
    return report
