"""Relevance scorers and deterministic reranking.

Four scorers over a fixed candidate pool: BM25 and a Jelinek-Mercer
smoothed language model (both in their Lucene ``log(1 + ...)`` forms over
an inverted index), plus two scorers over precomputed per-document token
weights: summed token log-probabilities and exact-match impact weights.
Ties are always broken by doc_id ascending so reranking is a pure function
of its inputs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .analysis import unique_token_counts
from .errors import EngineError, NotFoundError, ValidationError
from .lexindex import ImpactStore, InvertedIndex, TildeDistributionStore
from .wordpiece import Vocabulary


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 2.75
    b: float = 1.0

    def __post_init__(self):
        if self.k1 < 0:
            raise ValidationError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValidationError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class LmJmParams:
    lam: float = 0.1

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValidationError(f"lambda must be in (0, 1), got {self.lam}")


@dataclass(frozen=True)
class ExpansionConfig:
    m: int
    exclude_continuation_pieces: bool = True
    exclude_special_tokens: bool = True

    def __post_init__(self):
        if self.m < 0:
            raise ValidationError(f"expansion size m must be >= 0, got {self.m}")


@dataclass(frozen=True)
class ScoredList:
    """One query's candidates ordered by score descending, doc_id ascending."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    @classmethod
    def from_scores(cls, query_id: str, scores: Mapping[str, float]) -> "ScoredList":
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(query_id=query_id, entries=tuple(ordered))

    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.entries]

    def scores(self) -> dict[str, float]:
        return dict(self.entries)


def bm25_term_weight(
    tf: int, df: int, num_docs: int, dl: int, avg_dl: float, params: Bm25Params
) -> float:
    """Lucene-style BM25 contribution of a single matched term."""
    if tf <= 0:
        return 0.0
    idf = math.log(1.0 + (num_docs - df + 0.5) / (df + 0.5))
    norm = params.k1 * (1.0 - params.b + params.b * dl / avg_dl)
    return idf * tf / (tf + norm)


def bm25_score(
    query_terms: Sequence[str],
    doc_id: str,
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
    multiplicity: bool = False,
) -> float:
    """Sum of matched-term BM25 weights over the distinct query terms.

    With ``multiplicity`` each distinct term is weighted by its query
    occurrence count, which can matter for document-length queries.
    """
    if doc_id not in index:
        raise NotFoundError(f"doc_id {doc_id!r} not in index")
    tfs = index.doc_term_freqs(doc_id)
    stats = index.stats
    dl = stats.doc_len[doc_id]
    score = 0.0
    for term, qcount in sorted(Counter(query_terms).items()):
        tf = tfs.get(term, 0)
        if tf == 0:
            continue
        w = bm25_term_weight(tf, stats.df[term], stats.num_docs, dl, stats.avg_doc_len, params)
        score += w * (qcount if multiplicity else 1)
    return score


def lm_jm_score(
    query_terms: Sequence[str],
    doc_id: str,
    index: InvertedIndex,
    params: LmJmParams = LmJmParams(),
) -> float:
    """Jelinek-Mercer query likelihood in the Lucene log(1 + ...) form.

    Every query token occurrence with a document match contributes
    ln(1 + ((1-lambda) * tf/dl) / (lambda * cf/T)).
    """
    if doc_id not in index:
        raise NotFoundError(f"doc_id {doc_id!r} not in index")
    tfs = index.doc_term_freqs(doc_id)
    stats = index.stats
    dl = stats.doc_len[doc_id]
    total = stats.total_tokens
    score = 0.0
    for term in query_terms:
        tf = tfs.get(term, 0)
        if tf == 0:
            continue
        collection_prob = stats.cf[term] / total
        score += math.log(1.0 + ((1.0 - params.lam) * tf / dl) / (params.lam * collection_prob))
    return score


def tilde_ql(
    query_token_ids: Sequence[int],
    doc_id: str,
    store: TildeDistributionStore,
) -> float:
    """Sum of stored log-probabilities over all query token occurrences."""
    if doc_id not in store:
        raise NotFoundError(f"doc_id {doc_id!r} not in distribution store")
    table = store.distributions[doc_id]
    floor = store.floor_logprob
    return sum(table.get(tid, floor) for tid in query_token_ids)


def tildev2_score(
    query_token_ids: Sequence[int],
    doc_id: str,
    store: ImpactStore,
) -> float:
    """Exact-match impact score: query count times stored weight per unique token."""
    if doc_id not in store:
        raise NotFoundError(f"doc_id {doc_id!r} not in impact store")
    weights = store.impacts[doc_id]
    score = 0.0
    for token_id, count in unique_token_counts(query_token_ids).items():
        w = weights.get(token_id)
        if w is not None:
            score += count * w
    return score


def expand_document(
    doc_token_ids: set[int],
    distribution: Sequence[tuple[int, float]],
    config: ExpansionConfig,
    vocab: Vocabulary,
) -> list[int]:
    """Pick expansion token ids for a document from its ranked distribution.

    The top-``m`` entries are filtered (special tokens, optionally
    continuation pieces) and only tokens not already in the document are
    returned, preserving rank order.
    """
    additions: list[int] = []
    seen: set[int] = set()
    for token_id, _logprob in distribution[: config.m]:
        if token_id in seen:
            continue
        seen.add(token_id)
        surface = vocab.tokens[token_id] if token_id < len(vocab.tokens) else None
        if surface is not None:
            if config.exclude_special_tokens and vocab.is_special(surface):
                continue
            if config.exclude_continuation_pieces and vocab.is_continuation(surface):
                continue
        if token_id in doc_token_ids:
            continue
        additions.append(token_id)
    return additions


def expansion_stats(additions_per_doc: Mapping[str, int]) -> tuple[float, dict[str, int]]:
    """Mean number of added tokens per document, plus the per-document counts."""
    if not additions_per_doc:
        raise ValidationError("no expansion results to aggregate")
    per_doc = dict(additions_per_doc)
    return sum(per_doc.values()) / len(per_doc), per_doc


def rerank(
    query_id: str,
    candidates: Iterable[str],
    score: Callable[[str], float],
) -> ScoredList:
    """Score every pool member and order deterministically.

    Any scoring failure aborts the whole query with the query and document
    named in the error.
    """
    scores: dict[str, float] = {}
    for doc_id in candidates:
        try:
            scores[doc_id] = score(doc_id)
        except EngineError as exc:
            raise type(exc)(f"query {query_id!r}, candidate {doc_id!r}: {exc}") from exc
    return ScoredList.from_scores(query_id, scores)
