"""Inverted index, collection statistics, and precomputed weight stores.

The index feeds BM25 and the smoothed language model; the two stores hold
precomputed per-document token log-probabilities and scalar impact weights
consumed by the contextualized scorers.
"""

from __future__ import annotations

import json
import math
import threading
from bisect import bisect_left
from dataclasses import dataclass, field

from .analysis import AnalyzerKind, AnalyzerSpec, build_analyzer
from .corpus import Corpus, TitleOrder, compose_text
from .errors import (
    ConflictError,
    FormatError,
    NotFoundError,
    ParseError,
    RangeError,
    ValidationError,
)

INDEX_FORMAT = "qbe-lexica.index"
INDEX_VERSION = 1

# default score for tokens missing from a sparse distribution: ln(1e-6)
DEFAULT_FLOOR_LOGPROB = math.log(1e-6)


@dataclass
class IndexStats:
    num_docs: int
    total_tokens: int
    avg_doc_len: float
    doc_len: dict[str, int]
    df: dict[str, int]
    cf: dict[str, int]


@dataclass
class InvertedIndex:
    stats: IndexStats
    postings: dict[str, list[tuple[str, int]]]
    analyzer: AnalyzerSpec
    title_order: TitleOrder = TitleOrder.TITLE_FIRST
    _doc_tfs: dict[str, dict[str, int]] | None = field(
        default=None, repr=False, compare=False
    )
    _tfs_lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.stats.doc_len

    def term_freq(self, term: str, doc_id: str) -> int:
        plist = self.postings.get(term)
        if not plist:
            return 0
        i = bisect_left(plist, (doc_id,))
        if i < len(plist) and plist[i][0] == doc_id:
            return plist[i][1]
        return 0

    def doc_term_freqs(self, doc_id: str) -> dict[str, int]:
        """Term frequencies of one document, built lazily from the postings.

        The build runs once under a lock; afterwards the map is read-only
        and safe for concurrent use.
        """
        if self._doc_tfs is None:
            with self._tfs_lock:
                if self._doc_tfs is None:
                    tfs: dict[str, dict[str, int]] = {d: {} for d in self.stats.doc_len}
                    for term, plist in self.postings.items():
                        for doc, tf in plist:
                            tfs[doc][term] = tf
                    self._doc_tfs = tfs
        try:
            return self._doc_tfs[doc_id]
        except KeyError:
            raise NotFoundError(f"doc_id {doc_id!r} not in index") from None


def build_index(
    corpus: Corpus,
    spec: AnalyzerSpec,
    title_order: TitleOrder = TitleOrder.TITLE_FIRST,
) -> InvertedIndex:
    if len(corpus) == 0:
        raise ValidationError("cannot index an empty corpus")
    analyzer = build_analyzer(spec)
    doc_len: dict[str, int] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    df: dict[str, int] = {}
    cf: dict[str, int] = {}
    for doc in sorted(corpus, key=lambda d: d.doc_id):
        tokens = analyzer(compose_text(doc, title_order))
        doc_len[doc.doc_id] = len(tokens)
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok.surface] = counts.get(tok.surface, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((doc.doc_id, tf))
            df[term] = df.get(term, 0) + 1
            cf[term] = cf.get(term, 0) + tf
    total = sum(doc_len.values())
    stats = IndexStats(
        num_docs=len(doc_len),
        total_tokens=total,
        avg_doc_len=total / len(doc_len),
        doc_len=doc_len,
        df=df,
        cf=cf,
    )
    return InvertedIndex(stats=stats, postings=postings, analyzer=spec, title_order=title_order)


def persist_index(index: InvertedIndex, path) -> None:
    payload = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "analyzer": {
            "kind": index.analyzer.kind.value,
            "vocab_path": index.analyzer.vocab_path,
            "lowercase": index.analyzer.lowercase,
            "strip_accents": index.analyzer.strip_accents,
        },
        "title_order": index.title_order.value,
        "stats": {
            "num_docs": index.stats.num_docs,
            "total_tokens": index.stats.total_tokens,
            "avg_doc_len": index.stats.avg_doc_len,
            "doc_len": index.stats.doc_len,
            "df": index.stats.df,
            "cf": index.stats.cf,
        },
        "postings": {t: [[d, tf] for d, tf in plist] for t, plist in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        fh.write("\n")


def load_index(path) -> InvertedIndex:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a valid index file: {exc.msg}") from exc
    if not isinstance(payload, dict) or payload.get("format") != INDEX_FORMAT:
        raise FormatError(f"{path}: missing or wrong format header")
    if payload.get("version") != INDEX_VERSION:
        raise FormatError(
            f"{path}: unsupported index version {payload.get('version')!r}, expected {INDEX_VERSION}"
        )
    a = payload["analyzer"]
    spec = AnalyzerSpec(
        kind=AnalyzerKind(a["kind"]),
        vocab_path=a.get("vocab_path"),
        lowercase=a.get("lowercase", True),
        strip_accents=a.get("strip_accents", True),
    )
    s = payload["stats"]
    stats = IndexStats(
        num_docs=s["num_docs"],
        total_tokens=s["total_tokens"],
        avg_doc_len=s["avg_doc_len"],
        doc_len=dict(s["doc_len"]),
        df=dict(s["df"]),
        cf=dict(s["cf"]),
    )
    postings = {
        t: [(d, int(tf)) for d, tf in plist] for t, plist in payload["postings"].items()
    }
    return InvertedIndex(
        stats=stats,
        postings=postings,
        analyzer=spec,
        title_order=TitleOrder(payload.get("title_order", "title-first")),
    )


class TildeDistributionStore:
    """Per-document sparse token log-probability tables.

    Lookups are total: tokens absent from a document's table score
    ``floor_logprob``.
    """

    def __init__(
        self,
        distributions: dict[str, dict[int, float]],
        vocab_size: int,
        floor_logprob: float = DEFAULT_FLOOR_LOGPROB,
    ):
        if floor_logprob > 0:
            raise ValidationError(f"floor_logprob must be <= 0, got {floor_logprob}")
        for doc_id, table in distributions.items():
            for token_id, logprob in table.items():
                _check_token_id(token_id, vocab_size, doc_id)
                if logprob > 0:
                    raise ValidationError(
                        f"doc {doc_id!r} token {token_id}: log-probability {logprob} > 0"
                    )
        self.distributions = distributions
        self.vocab_size = vocab_size
        self.floor_logprob = floor_logprob

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.distributions

    def logprob(self, doc_id: str, token_id: int) -> float:
        try:
            table = self.distributions[doc_id]
        except KeyError:
            raise NotFoundError(f"doc_id {doc_id!r} not in distribution store") from None
        return table.get(token_id, self.floor_logprob)

    def ranked_entries(self, doc_id: str) -> list[tuple[int, float]]:
        """Entries of one document sorted by log-probability descending."""
        try:
            table = self.distributions[doc_id]
        except KeyError:
            raise NotFoundError(f"doc_id {doc_id!r} not in distribution store") from None
        return sorted(table.items(), key=lambda kv: (-kv[1], kv[0]))


def _check_token_id(token_id: int, vocab_size: int, doc_id: str) -> None:
    if not 0 <= token_id < vocab_size:
        raise RangeError(
            f"doc {doc_id!r}: token_id {token_id} outside vocabulary of size {vocab_size}"
        )


def load_tilde_store(
    path,
    vocab_size: int,
    floor_logprob: float = DEFAULT_FLOOR_LOGPROB,
) -> TildeDistributionStore:
    """Read a distribution file (JSON lines of doc_id + [token_id, logprob] pairs).

    A leading header line ``{"floor_logprob": x}`` overrides the default floor.
    """
    distributions: dict[str, dict[int, float]] = {}
    floor = floor_logprob
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if line_no == 1 and "doc_id" not in rec and "floor_logprob" in rec:
                floor = float(rec["floor_logprob"])
                continue
            try:
                doc_id = str(rec["doc_id"])
                entries = rec["entries"]
            except (KeyError, TypeError) as exc:
                raise ParseError(path, line_no, "record needs doc_id and entries") from exc
            if doc_id in distributions:
                raise ConflictError(f"{path}:{line_no}: duplicate distribution for doc {doc_id!r}")
            table: dict[int, float] = {}
            for pair in entries:
                token_id, logprob = int(pair[0]), float(pair[1])
                if token_id in table:
                    raise ConflictError(
                        f"{path}:{line_no}: duplicate token_id {token_id} for doc {doc_id!r}"
                    )
                table[token_id] = logprob
            distributions[doc_id] = table
    return TildeDistributionStore(distributions, vocab_size=vocab_size, floor_logprob=floor)


def write_tilde_store(
    distributions: dict[str, dict[int, float]],
    path,
    floor_logprob: float | None = None,
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if floor_logprob is not None:
            fh.write(json.dumps({"floor_logprob": floor_logprob}) + "\n")
        for doc_id in sorted(distributions):
            entries = sorted(distributions[doc_id].items(), key=lambda kv: (-kv[1], kv[0]))
            fh.write(json.dumps(
                {"doc_id": doc_id, "entries": [[t, lp] for t, lp in entries]},
                sort_keys=True, separators=(",", ":"),
            ) + "\n")


class ImpactStore:
    """Per-document scalar term weights for exact-match scoring.

    One weight per token id (the maximum over document positions); missing
    tokens weigh 0.
    """

    def __init__(self, impacts: dict[str, dict[int, float]], vocab_size: int):
        for doc_id, table in impacts.items():
            for token_id, w in table.items():
                _check_token_id(token_id, vocab_size, doc_id)
                if w < 0:
                    raise ValidationError(f"doc {doc_id!r} token {token_id}: negative weight {w}")
        self.impacts = impacts
        self.vocab_size = vocab_size

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.impacts

    def weight(self, doc_id: str, token_id: int) -> float:
        try:
            table = self.impacts[doc_id]
        except KeyError:
            raise NotFoundError(f"doc_id {doc_id!r} not in impact store") from None
        return table.get(token_id, 0.0)

    def doc_weights(self, doc_id: str) -> dict[int, float]:
        try:
            return self.impacts[doc_id]
        except KeyError:
            raise NotFoundError(f"doc_id {doc_id!r} not in impact store") from None


def load_impact_store(path, vocab_size: int) -> ImpactStore:
    impacts: dict[str, dict[int, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            try:
                doc_id = str(rec["doc_id"])
                weights = rec["weights"]
            except (KeyError, TypeError) as exc:
                raise ParseError(path, line_no, "record needs doc_id and weights") from exc
            if doc_id in impacts:
                raise ConflictError(f"{path}:{line_no}: duplicate weights for doc {doc_id!r}")
            table: dict[int, float] = {}
            for pair in weights:
                token_id, w = int(pair[0]), float(pair[1])
                if token_id in table:
                    raise ConflictError(
                        f"{path}:{line_no}: duplicate token_id {token_id} for doc {doc_id!r}"
                    )
                table[token_id] = w
            impacts[doc_id] = table
    return ImpactStore(impacts, vocab_size=vocab_size)


def write_impact_store(impacts: dict[str, dict[int, float]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(impacts):
            weights = sorted(impacts[doc_id].items())
            fh.write(json.dumps(
                {"doc_id": doc_id, "weights": [[t, w] for t, w in weights]},
                sort_keys=True, separators=(",", ":"),
            ) + "\n")


def merge_impacts(base: dict[int, float], additions: dict[int, float]) -> dict[int, float]:
    """Fold expansion-token weights into a document's impact table.

    On overlap the larger weight wins, consistent with per-token-max storage.
    """
    merged = dict(base)
    for token_id, w in additions.items():
        if w < 0:
            raise ValidationError(f"negative expansion weight {w} for token {token_id}")
        merged[token_id] = max(merged.get(token_id, 0.0), w)
    return merged
