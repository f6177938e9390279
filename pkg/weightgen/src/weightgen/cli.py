"""Command-line exporter: corpus + MLM checkpoint -> engine weight stores."""

from __future__ import annotations

import argparse
import logging
import shlex
import sys

from .export import ExportConfig, ExportError, StoreKind, WeightExporter
from .validate import default_engine_command, validate_impact_file, validate_tilde_file

log = logging.getLogger("weightgen")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weightgen",
        description="Export per-document token weights from an MLM checkpoint.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--model", required=True, help="checkpoint directory or model id")
        p.add_argument("--corpus", required=True, help="engine corpus JSONL")
        p.add_argument("--output", required=True)
        p.add_argument("--vocab-output", help="also write the model vocabulary here")
        p.add_argument("--max-doc-tokens", type=int, default=512)
        p.add_argument("--batch-size", type=int, default=8)
        p.add_argument("--device", default="cpu")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--no-lowercase", action="store_true")
        p.add_argument("--keep-accents", action="store_true")
        p.add_argument("--validate", action="store_true",
                       help="shell out to the engine CLI to confirm loadability")
        p.add_argument("--engine-cli", help="engine command (default: python -m qbe_lexica)")

    p = sub.add_parser("export-tilde", help="vocabulary-wide log-probability distributions")
    common(p)
    p.add_argument("--top-k", type=int, default=64)
    p.add_argument("--mean-pool", action="store_true",
                   help="pool over token positions instead of the [CLS] position")
    p.set_defaults(kind=StoreKind.TILDE_DISTRIBUTION)

    p = sub.add_parser("export-impacts", help="scalar exact-match term weights")
    common(p)
    p.add_argument("--projection", help="trained scalar projection head state dict")
    p.add_argument("--keep-special-tokens", action="store_true")
    p.set_defaults(kind=StoreKind.IMPACT)

    p = sub.add_parser("export-expansion", help="ranked top-m expansion candidate lists")
    common(p)
    p.add_argument("--expansion-m", type=int, required=True)
    p.add_argument("--mean-pool", action="store_true")
    p.set_defaults(kind=StoreKind.TILDE_DISTRIBUTION)

    return parser


def _config_from(args) -> ExportConfig:
    return ExportConfig(
        model_name=args.model,
        store_kind=args.kind,
        top_k=getattr(args, "top_k", 64),
        max_doc_tokens=args.max_doc_tokens,
        batch_size=args.batch_size,
        device=args.device,
        seed=args.seed,
        mean_pool=getattr(args, "mean_pool", False),
        skip_special_tokens=not getattr(args, "keep_special_tokens", False),
        projection_path=getattr(args, "projection", None),
        lowercase=not args.no_lowercase,
        strip_accents=not args.keep_accents,
    )


def run(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        exporter = WeightExporter(_config_from(args))
        vocab_path = args.vocab_output
        if args.validate and not vocab_path:
            vocab_path = args.output + ".vocab.txt"
        if vocab_path:
            exporter.write_vocab(vocab_path)
        if args.subcommand == "export-tilde":
            exporter.export_tilde(args.corpus, args.output)
        elif args.subcommand == "export-impacts":
            exporter.export_impacts(args.corpus, args.output)
        else:
            exporter.export_expansion_lists(args.corpus, args.output, m=args.expansion_m)
        if args.validate:
            engine_cmd = shlex.split(args.engine_cli) if args.engine_cli else default_engine_command()
            if args.subcommand == "export-impacts":
                validate_impact_file(args.output, args.corpus, vocab_path, engine_cmd)
            else:
                validate_tilde_file(args.output, args.corpus, vocab_path, engine_cmd)
        return 0
    except ExportError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2
    except Exception:  # noqa: BLE001 - CLI boundary
        log.exception("internal error")
        return 3


def main() -> None:
    sys.exit(run())
