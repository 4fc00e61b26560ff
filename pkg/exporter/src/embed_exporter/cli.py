"""Command line for the embedding exporter."""

from __future__ import annotations

import argparse
import json
import sys

from .encoders import EncoderError
from .export import ExportError, ExportJob, export
from .store import StoreFormatError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-exporter",
        description="Embed a reaction dataset and template library into an EMBS store.",
    )
    parser.add_argument("--dataset", required=True, help="line-delimited JSON dataset")
    parser.add_argument("--templates", required=True, help="template library JSON")
    parser.add_argument(
        "--encoder", required=True,
        help="hash:<dim> or a Hugging Face model name/path",
    )
    parser.add_argument("--output", required=True, help="EMBS store to write")
    parser.add_argument(
        "--pooling", choices=("mean", "first-token"), default="mean",
        help="sentence pooling over encoder states",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    args = parser.parse_args(argv)
    job = ExportJob(
        dataset=args.dataset,
        templates=args.templates,
        encoder=args.encoder,
        output=args.output,
        pooling=args.pooling,
        batch_size=args.batch_size,
    )
    try:
        summary = export(job)
    except (ExportError, EncoderError, StoreFormatError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
