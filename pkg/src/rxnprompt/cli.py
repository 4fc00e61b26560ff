"""Command-line pipeline: elicit, curate, prompts, generate, evaluate, run-all.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 backend
error. Failures print one machine-readable JSON line to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classifier import classifier_fingerprint, load_classifier, save_classifier
from .clustering import project_2d, save_kmeans
from .config import RunConfig, load_config, make_backend, make_provider, require_path
from .curation import CuratedDataset, annotate_dataset, write_sidecar
from .elicitation import (
    composed_matrix,
    corpus_embeddings,
    run_sweep,
    self_feedback_round,
)
from .errors import BackendError, ConfigError, DataError, RxnPromptError
from .genbackend import GenerationRequest
from .metrics import MetricReport, build_report
from .prompting import TemplateLibrary, build_prompted_dataset, load_prompted, save_prompted
from .records import clean_dataset, load_dataset, save_dataset

log = logging.getLogger(__name__)

SWEEP_REPORT = "sweep_report.json"
CLASSIFIER_FILE = "rt_classifier.rtcl"
CLUSTER_FILE = "cluster_model.kmns"
TRAIN_LABELED = "train_labeled.jsonl"
PROJECTION_FILE = "projection.jsonl"
PROMPTED_FILE = "prompted_test.jsonl"
PREDICTIONS_FILE = "predictions.jsonl"
METRICS_FILE = "metrics.json"
RUN_REPORT = "run_report.json"


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_templates(config: RunConfig) -> TemplateLibrary:
    if config.templates is not None:
        return TemplateLibrary.from_file(require_path(config.templates, "template library"))
    return TemplateLibrary.default()


def cmd_elicit(config: RunConfig) -> dict:
    """Clean, sweep, re-run self-feedback at the best cell, write artifacts."""
    train_path = require_path(config.train, "train dataset")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_dataset(train_path)
    kept, dropped = clean_dataset(records)
    if dropped:
        log.info("dropped %d records failing SMILES validation", len(dropped))
    if not kept:
        raise DataError(f"no valid records left in {train_path}")

    provider = make_provider(config)
    policy = config.policy()
    vectors = corpus_embeddings(provider, kept)
    report = run_sweep(
        kept,
        provider,
        config.encoding_methods(),
        n_range=(config.n_min, config.n_max),
        seed=config.seed,
        policy=policy,
        _vectors=vectors,
    )
    best = report.best
    result = self_feedback_round(
        kept, provider, best.encoding, best.n, config.seed,
        rounds_max=config.rounds_max, min_gain=policy.min_gain,
        policy=policy, _vectors=vectors,
    )

    report_path = out_dir / SWEEP_REPORT
    payload = report.to_dict()
    payload["dropped"] = [[rec_id, reason] for rec_id, reason in dropped]
    payload["accuracy_history"] = result.accuracy_history
    _write_json(report_path, payload)

    model_path = out_dir / CLASSIFIER_FILE
    save_classifier(result.model, model_path)
    cluster_path = out_dir / CLUSTER_FILE
    save_kmeans(result.cluster_model, cluster_path)

    labeled = [rec.with_rt(int(result.labels[i])) for i, rec in enumerate(kept)]
    labeled_path = out_dir / TRAIN_LABELED
    save_dataset(labeled, labeled_path)

    composed = composed_matrix(best.encoding, *vectors)
    coords = project_2d(composed, seed=config.seed)
    with (out_dir / PROJECTION_FILE).open("w", encoding="utf-8") as fh:
        for rec, label, point in zip(kept, result.labels, coords):
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "rt": int(label),
                        "x": round(float(point[0]), 9),
                        "y": round(float(point[1]), 9),
                    },
                    sort_keys=True,
                )
                + "\n"
            )

    return {
        "best": best.to_dict(),
        "report": SWEEP_REPORT,
        "classifier": CLASSIFIER_FILE,
        "cluster_model": CLUSTER_FILE,
        "train_labeled": TRAIN_LABELED,
        "projection": PROJECTION_FILE,
        "records": len(kept),
        "dropped": len(dropped),
        "final_accuracy": result.accuracy,
        "rounds_used": result.rounds_used,
    }


def _curate_one(config: RunConfig, dataset_path: Path, tag: str, out_dir: Path) -> dict:
    records = load_dataset(dataset_path)
    provider = make_provider(config)
    model_path = require_path(str(out_dir / CLASSIFIER_FILE), "classifier model")
    model = load_classifier(model_path)
    curated = annotate_dataset(
        records,
        provider,
        model,
        source=dataset_path.name,
        model_fingerprint=classifier_fingerprint(model_path),
    )
    curated_path = out_dir / f"curated_{tag}.jsonl"
    save_dataset(curated.records, curated_path)
    write_sidecar(curated, curated_path)
    return {
        "file": curated_path.name,
        "records": len(curated.records),
        "overwritten": curated.overwritten,
        "model_fingerprint": curated.model_fingerprint,
    }


def cmd_curate(config: RunConfig) -> dict:
    """Annotate the valid/test datasets with the frozen classifier."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results: dict = {}
    if config.valid is None and config.test is None:
        raise ConfigError("curate needs a valid and/or test dataset path")
    if config.valid is not None:
        results["valid"] = _curate_one(
            config, require_path(config.valid, "valid dataset"), "valid", out_dir
        )
    if config.test is not None:
        results["test"] = _curate_one(
            config, require_path(config.test, "test dataset"), "test", out_dir
        )
    return results


def load_curated(path: str | Path) -> CuratedDataset:
    """Read back a curated dataset together with its sidecar metadata."""
    path = Path(path)
    records = load_dataset(path)
    for rec in records:
        if rec.rt is None:
            raise DataError(f"{path}: record {rec.id} has no rt label")
    max_rt = max((rec.rt for rec in records), default=0)
    meta_path = Path(str(path) + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        n_classes = int(meta["n_classes"])
        fingerprint_hex = str(meta["model_fingerprint"])
        source = str(meta.get("source", path.name))
        if max_rt >= n_classes:
            raise DataError(
                f"{path}: rt label {max_rt} outside sidecar n_classes {n_classes}"
            )
    else:
        n_classes = max_rt + 1 if records else 2
        fingerprint_hex = ""
        source = path.name
    return CuratedDataset(
        records=records,
        source=source,
        model_fingerprint=fingerprint_hex,
        n_classes=n_classes,
    )


def cmd_prompts(config: RunConfig, dataset: str | None = None) -> dict:
    """Build enhanced prompts for a curated dataset (default: curated test)."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_path = require_path(
        dataset or str(out_dir / "curated_test.jsonl"), "curated dataset"
    )
    curated = load_curated(dataset_path)
    library = _load_templates(config)
    provider = make_provider(config)
    rows = build_prompted_dataset(
        curated, library, provider, static_template=config.static_template
    )
    prompted_path = out_dir / PROMPTED_FILE
    save_prompted(rows, prompted_path)
    return {"file": prompted_path.name, "rows": len(rows), "static": config.static_template}


def cmd_generate(config: RunConfig, prompted: str | None = None) -> dict:
    """Run the generation backend over a prompted dataset."""
    out_dir = Path(config.out_dir)
    prompted_path = require_path(
        prompted or str(out_dir / PROMPTED_FILE), "prompted dataset"
    )
    rows = load_prompted(prompted_path)
    if not rows:
        raise DataError(f"{prompted_path}: no prompted rows")
    backend = make_backend(config)
    if backend is None:
        raise ConfigError("no generation backend configured (backend key or RXN_GEN_URL)")
    request = GenerationRequest(
        prompts=[row.prompt for row in rows],
        max_new_tokens=config.max_new_tokens,
        temperature=config.temperature,
    )
    outputs = backend.generate(request)
    if len(outputs) != len(rows):
        raise BackendError(
            f"backend returned {len(outputs)} outputs for {len(rows)} prompts"
        )
    predictions_path = out_dir / PREDICTIONS_FILE
    with predictions_path.open("w", encoding="utf-8") as fh:
        for row, output in zip(rows, outputs):
            fh.write(
                json.dumps({"id": row.id, "prediction": output}, ensure_ascii=False) + "\n"
            )
    return {"file": predictions_path.name, "rows": len(rows)}


def _load_predictions(path: Path) -> dict[str, str]:
    out: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[str(obj["id"])] = str(obj["prediction"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}: line {line_no}: bad prediction row: {exc}") from None
    return out


def cmd_evaluate(
    config: RunConfig,
    predictions: str,
    references: str,
    baseline: str | None = None,
) -> dict:
    """Score predictions against a reference dataset aligned by id."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictions_path = require_path(predictions, "predictions file")
    references_path = require_path(references, "references file")
    pred_by_id = _load_predictions(predictions_path)
    refs = load_dataset(references_path)
    if not refs or not pred_by_id:
        raise DataError("empty predictions or references")
    missing = [rec.id for rec in refs if rec.id not in pred_by_id]
    if missing:
        raise DataError(f"prediction missing for id {missing[0]!r}")
    extra = set(pred_by_id) - {rec.id for rec in refs}
    if extra:
        raise DataError(f"prediction for unknown id {sorted(extra)[0]!r}")
    baseline_report = None
    if baseline is not None:
        baseline_report = MetricReport.load(require_path(baseline, "baseline report"))
    report = build_report(
        predictions=[pred_by_id[rec.id] for rec in refs],
        references=[rec.output for rec in refs],
        tasks=[rec.task.value for rec in refs],
        baseline=baseline_report,
    )
    metrics_path = out_dir / METRICS_FILE
    report.save(metrics_path)
    result = report.to_dict()
    result["file"] = metrics_path.name
    return result


def cmd_run_all(config: RunConfig) -> dict:
    """elicit -> curate -> prompts -> generate (optional) -> evaluate."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stages: dict = {}
    stage = "elicit"
    try:
        stages["elicit"] = cmd_elicit(config)
        if config.valid is not None or config.test is not None:
            stage = "curate"
            stages["curate"] = cmd_curate(config)
        if config.test is not None:
            stage = "prompts"
            stages["prompts"] = cmd_prompts(config)
            backend = make_backend(config)
            if backend is not None:
                stage = "generate"
                stages["generate"] = cmd_generate(config)
                stage = "evaluate"
                stages["evaluate"] = cmd_evaluate(
                    config,
                    predictions=str(out_dir / PREDICTIONS_FILE),
                    references=str(out_dir / "curated_test.jsonl"),
                )
    except RxnPromptError as exc:
        raise type(exc)(f"stage {stage}: {exc}") from None
    _write_json(out_dir / RUN_REPORT, {"stages": stages})
    stages["report"] = RUN_REPORT
    return stages


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rxnprompt",
        description="Reaction-type elicitation, curation, prompting and evaluation.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--provider", help="hash:<dim> | file:<path> | http[:<url>]")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--train")
        p.add_argument("--valid")
        p.add_argument("--test")
        p.add_argument("--templates")
        p.add_argument("--backend", help="echo | http[:<url>]")
        p.add_argument("--n-min", dest="n_min", type=int)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--encodings", help="comma-separated encoding names")
        p.add_argument("--accuracy-floor", dest="accuracy_floor", type=float)
        p.add_argument("--rounds-max", dest="rounds_max", type=int)
        p.add_argument("--epochs", type=int)

    for name in ("elicit", "curate", "generate", "run-all"):
        add_common(sub.add_parser(name))
    p_prompts = sub.add_parser("prompts")
    add_common(p_prompts)
    p_prompts.add_argument("--dataset", help="curated dataset to prompt")
    p_prompts.add_argument(
        "--static-template", dest="static_template", action="store_const", const=True
    )
    p_eval = sub.add_parser("evaluate")
    add_common(p_eval)
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--references", required=True)
    p_eval.add_argument("--baseline")
    return parser


_OVERRIDE_KEYS = (
    "provider", "seed", "out_dir", "train", "valid", "test", "templates",
    "backend", "n_min", "n_max", "accuracy_floor", "rounds_max", "epochs",
    "static_template",
)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    overrides = {key: getattr(args, key, None) for key in _OVERRIDE_KEYS}
    if getattr(args, "encodings", None):
        overrides["encodings"] = [s.strip() for s in args.encodings.split(",") if s.strip()]
    try:
        config = load_config(args.config, overrides)
        if args.command == "elicit":
            result = cmd_elicit(config)
        elif args.command == "curate":
            result = cmd_curate(config)
        elif args.command == "prompts":
            result = cmd_prompts(config, dataset=args.dataset)
        elif args.command == "generate":
            result = cmd_generate(config)
        elif args.command == "evaluate":
            result = cmd_evaluate(
                config, args.predictions, args.references, baseline=args.baseline
            )
        else:
            result = cmd_run_all(config)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    except DataError as exc:
        print(json.dumps({"error": "data", "message": str(exc)}), file=sys.stderr)
        return 3
    except BackendError as exc:
        print(json.dumps({"error": "backend", "message": str(exc)}), file=sys.stderr)
        return 4
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
