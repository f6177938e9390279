"""Confirm exported files load in the reranking engine, via its CLI."""

from __future__ import annotations

import json
import logging
import subprocess
import sys
import tempfile
from pathlib import Path

from .export import ExportError

log = logging.getLogger("weightgen")


def default_engine_command() -> list[str]:
    return [sys.executable, "-m", "qbe_lexica"]


def _run_engine(argv, engine_cmd) -> None:
    cmd = list(engine_cmd) + argv
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExportError(
            f"engine validation failed (exit {proc.returncode}): {proc.stderr.strip()}"
        )
    warnings = [ln for ln in proc.stderr.splitlines() if "WARNING" in ln]
    if warnings:
        raise ExportError(f"engine emitted validation warnings: {warnings}")


def validate_tilde_file(store_path, corpus_path, vocab_path, engine_cmd=None) -> None:
    """A zero-term expansion pass loads and fully validates a distribution file."""
    engine_cmd = engine_cmd or default_engine_command()
    with tempfile.TemporaryDirectory(prefix="weightgen-validate-") as tmp:
        _run_engine([
            "expand", "--corpus", str(corpus_path), "--vocab", str(vocab_path),
            "--tilde-store", str(store_path), "--expansion-m", "0",
            "--output", str(Path(tmp) / "expansion.jsonl"),
        ], engine_cmd)
    log.info("engine accepted distribution file %s", store_path)


def validate_impact_file(store_path, corpus_path, vocab_path, engine_cmd=None) -> None:
    """A single-query rerank loads and fully validates an impact file."""
    engine_cmd = engine_cmd or default_engine_command()
    doc_ids = []
    with open(corpus_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc_ids.append(str(json.loads(line)["doc_id"]))
            if len(doc_ids) >= 30:
                break
    if not doc_ids:
        raise ExportError(f"{corpus_path}: empty corpus, nothing to validate against")
    with tempfile.TemporaryDirectory(prefix="weightgen-validate-") as tmp:
        pools_path = Path(tmp) / "pools.jsonl"
        pools_path.write_text(
            json.dumps({"query_id": doc_ids[0], "candidates": doc_ids}) + "\n",
            encoding="utf-8",
        )
        _run_engine([
            "rerank", "--corpus", str(corpus_path), "--pools", str(pools_path),
            "--scorer", "tildev2", "--impact-store", str(store_path),
            "--vocab", str(vocab_path),
            "--output", str(Path(tmp) / "validate.run"), "--tag", "validate",
        ], engine_cmd)
    log.info("engine accepted impact file %s", store_path)
