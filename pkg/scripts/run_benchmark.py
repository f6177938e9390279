#!/usr/bin/env python3
"""End-to-end experiment on a generated or existing dataset.

Indexes the corpus, reranks with all four scorers, fuses BM25 with each
contextualized scorer over the alpha grid, runs the per-query oracle, and
prints a summary table of aggregate MAP/nDCG per system.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from qbe_lexica.cli import run
from qbe_lexica.synth import generate_dataset


def sh(argv):
    code = run(argv)
    if code != 0:
        sys.exit(code)


def aggregate_of(report_path):
    rows = [json.loads(ln) for ln in Path(report_path).read_text().splitlines()]
    return next(r["value"] for r in rows if r["query_id"] == "ALL")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", help="existing dataset directory; generated when omitted")
    parser.add_argument("--out", help="output directory (default: temp)")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--threads", type=int, default=0)
    args = parser.parse_args()

    if args.data:
        d = Path(args.data)
    else:
        d = Path(tempfile.mkdtemp(prefix="qbe-data-"))
        print(f"generating synthetic dataset under {d}", file=sys.stderr)
        generate_dataset(d, seed=args.seed)
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="qbe-out-"))
    out.mkdir(parents=True, exist_ok=True)
    threads = str(args.threads)

    sh(["index", "--corpus", f"{d}/corpus.jsonl", "--analyzer", "stm2",
        "--output", f"{out}/index.json"])
    scorers = {
        "bm25": ["--scorer", "bm25", "--index", f"{out}/index.json", "--k1", "2.75", "--b", "1.0"],
        "lmjm": ["--scorer", "lmjm", "--index", f"{out}/index.json"],
        "tilde": ["--scorer", "tilde", "--tilde-store", f"{d}/tilde.jsonl", "--vocab", f"{d}/vocab.txt"],
        "tildev2": ["--scorer", "tildev2", "--impact-store", f"{d}/impacts.jsonl", "--vocab", f"{d}/vocab.txt"],
    }
    for name, extra in scorers.items():
        sh(["rerank", "--corpus", f"{d}/corpus.jsonl", "--pools", f"{d}/pools.jsonl",
            "--output", f"{out}/{name}.run", "--tag", name, "--threads", threads, *extra])

    print(f"\n{'system':<28} {'MAP':>8} {'nDCG':>8}")
    for name in scorers:
        values = []
        for metric in ("map", "ndcg"):
            sh(["evaluate", "--run", f"{out}/{name}.run", "--qrels", f"{d}/qrels.txt",
                "--metric", metric, "--output", f"{out}/{name}.{metric}.jsonl"])
            values.append(aggregate_of(f"{out}/{name}.{metric}.jsonl"))
        print(f"{name:<28} {values[0]:>8.4f} {values[1]:>8.4f}")

    for ctx in ("tilde", "tildev2"):
        for metric in ("map", "ndcg"):
            sh(["sweep", "--bm25-run", f"{out}/bm25.run", "--ctx-run", f"{out}/{ctx}.run",
                "--qrels", f"{d}/qrels.txt", "--metric", metric, "--grid-step", "0.1",
                "--output", f"{out}/sweep.bm25+{ctx}.{metric}.jsonl"])
            rows = [json.loads(ln)
                    for ln in Path(f"{out}/sweep.bm25+{ctx}.{metric}.jsonl").read_text().splitlines()]
            fixed = {r["alpha"]: r["metric_value"] for r in rows if r["query_id"] == "ALL"}
            best_alpha = max(fixed, key=lambda a: (fixed[a], -a))
            sh(["sweep", "--bm25-run", f"{out}/bm25.run", "--ctx-run", f"{out}/{ctx}.run",
                "--qrels", f"{d}/qrels.txt", "--metric", metric, "--oracle",
                "--output", f"{out}/oracle.bm25+{ctx}.{metric}.jsonl"])
            oracle_all = [json.loads(ln)
                          for ln in Path(f"{out}/oracle.bm25+{ctx}.{metric}.jsonl").read_text().splitlines()
                          if json.loads(ln)["query_id"] == "ALL"][0]
            label = f"bm25+{ctx} ({metric})"
            print(f"{label:<28} best fixed a={best_alpha:.1f}: {fixed[best_alpha]:.4f}   "
                  f"oracle: {oracle_all['metric_value']:.4f} "
                  f"(a_avg={oracle_all['alpha_average']:.3f}, "
                  f"n0={oracle_all['count_alpha_zero']}, n1={oracle_all['count_alpha_one']}, "
                  f"iqr={oracle_all['alpha_iqr']:.2f})")

    sh(["significance", "--run-a", f"{out}/bm25.run", "--run-b", f"{out}/tilde.run",
        "--qrels", f"{d}/qrels.txt", "--metric", "map", "--num-comparisons", "1",
        "--name-a", "bm25", "--name-b", "tilde", "--output", f"{out}/sig.jsonl"])
    print("\nreports under", out)


if __name__ == "__main__":
    main()
