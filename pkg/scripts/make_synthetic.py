#!/usr/bin/env python3
"""Generate a synthetic QBE benchmark (corpus, pools, qrels, vocab, stores)."""

import argparse
from pathlib import Path

from qbe_lexica.synth import generate_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--num-queries", type=int, default=1000)
    parser.add_argument("--pool-size", type=int, default=30)
    parser.add_argument("--num-positives", type=int, default=5)
    parser.add_argument("--vocab-size", type=int, default=30522)
    parser.add_argument("--num-candidate-docs", type=int, default=6000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()
    paths = generate_dataset(
        Path(args.out),
        num_queries=args.num_queries,
        pool_size=args.pool_size,
        num_positives=args.num_positives,
        vocab_size=args.vocab_size,
        num_candidate_docs=args.num_candidate_docs,
        seed=args.seed,
    )
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
