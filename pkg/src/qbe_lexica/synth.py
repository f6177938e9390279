"""Synthetic benchmark generator shaped like a scientific-paper QBE task.

Produces a corpus of title+abstract documents, per-query candidate pools
with a fixed number of positives, binary qrels, a subword vocabulary file,
and precomputed distribution/impact stores, all deterministically from a
seed. Positives share topical vocabulary with their query document so the
scorers have signal to disagree about.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .lexindex import DEFAULT_FLOOR_LOGPROB

SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def _make_words(n: int, rng: random.Random) -> list[str]:
    consonants = "bcdfghjklmnprstvwz"
    vowels = "aeiou"
    words = set()
    while len(words) < n:
        syllables = rng.randint(2, 4)
        w = "".join(rng.choice(consonants) + rng.choice(vowels) for _ in range(syllables))
        words.add(w)
    return sorted(words)


def generate_dataset(
    out_dir,
    num_queries: int = 1000,
    pool_size: int = 30,
    num_positives: int = 5,
    vocab_size: int = 30522,
    num_candidate_docs: int = 6000,
    seed: int = 42,
) -> dict[str, Path]:
    """Write corpus/pools/qrels/vocab/stores under ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    num_words = vocab_size - len(SPECIAL_TOKENS)
    words = _make_words(num_words, rng)
    word_id = {w: i + len(SPECIAL_TOKENS) for i, w in enumerate(words)}

    vocab_path = out / "vocab.txt"
    with open(vocab_path, "w", encoding="utf-8") as fh:
        for tok in SPECIAL_TOKENS + words:
            fh.write(tok + "\n")

    n_background = min(4000, max(20, len(words) // 3))
    n_topical = min(4000, max(12, len(words) // 3))
    background = words[:n_background]
    topical = words[n_background:n_background + n_topical]

    def sample_background(k: int) -> list[str]:
        # squared uniform skews draws toward low ranks, zipf-ish
        return [background[int(rng.random() ** 2 * len(background))] for _ in range(k)]

    def make_doc(doc_id: str, topic: list[str], topic_share: float) -> dict:
        n_tokens = rng.randint(25, 60)
        n_topic = int(n_tokens * topic_share)
        toks = [rng.choice(topic) for _ in range(n_topic)] + sample_background(n_tokens - n_topic)
        rng.shuffle(toks)
        title_len = rng.randint(3, 8)
        return {
            "doc_id": doc_id,
            "title": " ".join(toks[:title_len]),
            "abstract": " ".join(toks[title_len:]),
        }

    # topics overlap, so negatives can be confusable with positives
    topics = [rng.sample(topical, 12) for _ in range(num_queries)]

    docs: list[dict] = []
    pools: list[dict] = []
    qrels_lines: list[str] = []
    candidate_ids = [f"d{i:05d}" for i in range(num_candidate_docs)]
    by_topic: dict[int, list[str]] = {}
    for i, doc_id in enumerate(candidate_ids):
        topic_idx = i % num_queries
        by_topic.setdefault(topic_idx, []).append(doc_id)
        docs.append(make_doc(doc_id, topics[topic_idx], topic_share=rng.uniform(0.0, 0.3)))

    for q in range(num_queries):
        qid = f"q{q:04d}"
        docs.append(make_doc(qid, topics[q], topic_share=0.35))
        positives = [f"{qid}p{j}" for j in range(num_positives)]
        for pid in positives:
            docs.append(make_doc(pid, topics[q], topic_share=rng.uniform(0.05, 0.3)))
        # on-topic candidates are hard negatives; the remainder is random
        hard = by_topic.get(q, [])
        rest = rng.sample(candidate_ids, pool_size - num_positives)
        negatives = list(dict.fromkeys(hard + rest))[: pool_size - num_positives]
        pool = positives + negatives
        rng.shuffle(pool)
        pools.append({"query_id": qid, "candidates": pool})
        for pid in positives:
            qrels_lines.append(f"{qid} 0 {pid} 1")
        for nid in negatives:
            qrels_lines.append(f"{qid} 0 {nid} 0")

    corpus_path = out / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")

    pools_path = out / "pools.jsonl"
    with open(pools_path, "w", encoding="utf-8") as fh:
        for pool in pools:
            fh.write(json.dumps(pool, sort_keys=True) + "\n")

    qrels_path = out / "qrels.txt"
    qrels_path.write_text("\n".join(qrels_lines) + "\n", encoding="utf-8")

    # noisy stores correlated with document content
    tilde_path = out / "tilde.jsonl"
    impacts_path = out / "impacts.jsonl"
    with open(tilde_path, "w", encoding="utf-8") as tf, open(impacts_path, "w", encoding="utf-8") as wf:
        for doc in docs:
            doc_words = (doc["title"] + " " + doc["abstract"]).split()
            ids = sorted({word_id[w] for w in doc_words})
            entries = [[tid, round(-rng.uniform(0.5, 8.0), 6)] for tid in ids]
            extra = rng.sample(range(len(SPECIAL_TOKENS), vocab_size), 10)
            known = set(ids)
            entries += [[tid, round(-rng.uniform(6.0, 12.0), 6)] for tid in extra
                        if tid not in known]
            entries.sort(key=lambda e: (-e[1], e[0]))
            tf.write(json.dumps({"doc_id": doc["doc_id"], "entries": entries},
                                sort_keys=True, separators=(",", ":")) + "\n")
            weights = [[tid, round(rng.uniform(0.0, 3.0), 6)] for tid in ids]
            wf.write(json.dumps({"doc_id": doc["doc_id"], "weights": weights},
                                sort_keys=True, separators=(",", ":")) + "\n")

    return {
        "corpus": corpus_path,
        "pools": pools_path,
        "qrels": qrels_path,
        "vocab": vocab_path,
        "tilde": tilde_path,
        "impacts": impacts_path,
        "floor_logprob": DEFAULT_FLOOR_LOGPROB,
    }
