"""Command-line entry points: x2static-export and x2static-verify."""

from __future__ import annotations

import argparse
import sys

from .export import AlignmentError, ExportConfig, export_teacher_stream
from .formats import FormatError
from .verify import verify_stream


def export_main() -> None:
    parser = argparse.ArgumentParser(
        prog="x2static-export",
        description="Export word-level transformer vectors into the teacher stream format",
    )
    parser.add_argument("--corpus", required=True, help="canonical corpus file")
    parser.add_argument("--vocab", required=True, help="vocabulary TSV")
    parser.add_argument("--model", required=True, help="model directory or hub id")
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden-state index (0=embeddings, -1=last block)")
    parser.add_argument("--scope", choices=["sentence", "paragraph"], default="sentence")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--dtype", choices=["f32", "f16"], default="f32")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-length", type=int, default=None)
    parser.add_argument("--output", required=True)
    parser.add_argument("--verify", action="store_true",
                        help="run the stream/corpus consistency check afterwards")
    args = parser.parse_args()

    config = ExportConfig(
        model=args.model,
        layer=args.layer,
        scope=args.scope,
        batch_size=args.batch_size,
        dtype=args.dtype,
        device=args.device,
        max_length=args.max_length,
    )
    try:
        report = export_teacher_stream(args.corpus, args.vocab, config, args.output)
    except (AlignmentError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    print(f"export: {report.summary()}")
    if args.verify:
        result = verify_stream(args.output, args.corpus, args.vocab)
        print(f"verify: {result.summary()}")
        if not result.ok:
            sys.exit(3)


def verify_main() -> None:
    parser = argparse.ArgumentParser(
        prog="x2static-verify",
        description="Check a teacher stream against its corpus and vocabulary",
    )
    parser.add_argument("--stream", required=True)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--vocab", required=True)
    args = parser.parse_args()
    try:
        report = verify_stream(args.stream, args.corpus, args.vocab)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    print(f"verify: {report.summary()}")
    sys.exit(0 if report.ok else 1)
