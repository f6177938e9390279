"""Dataset model: documents, candidate pools, judgments, splits, triplets.

File formats:

* corpus        — JSON lines with ``doc_id``, ``title``, ``abstract``
* pools         — JSON lines with ``query_id``, ``candidates`` (doc_id array)
* judgments     — TREC qrels text: ``query_id 0 doc_id grade``
* triplets      — tab-separated ``query_id  positive_doc_id  negative_doc_id``
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ConflictError, ParseError, ValidationError


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str = ""
    abstract: str = ""

    def __post_init__(self):
        if not self.doc_id:
            raise ValidationError("document with empty doc_id")
        if not self.title and not self.abstract:
            raise ValidationError(f"document {self.doc_id!r} has neither title nor abstract")


class TitleOrder(str, Enum):
    TITLE_FIRST = "title-first"
    ABSTRACT_FIRST = "abstract-first"


def compose_text(doc: Document, order: TitleOrder = TitleOrder.TITLE_FIRST) -> str:
    """Join title and abstract with a single space; empty fields are skipped."""
    if order == TitleOrder.TITLE_FIRST:
        parts = (doc.title, doc.abstract)
    else:
        parts = (doc.abstract, doc.title)
    return " ".join(p for p in parts if p)


class Corpus:
    """Immutable-after-load collection of documents keyed by doc_id."""

    def __init__(self, documents: Iterable[Document] = ()):
        self._docs: dict[str, Document] = {}
        for doc in documents:
            self.add(doc)

    def add(self, doc: Document) -> None:
        if doc.doc_id in self._docs:
            raise ConflictError(f"duplicate doc_id {doc.doc_id!r}")
        self._docs[doc.doc_id] = doc

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def __getitem__(self, doc_id: str) -> Document:
        return self._docs[doc_id]

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self._docs == other._docs

    def doc_ids(self) -> list[str]:
        return list(self._docs)


def load_corpus(path) -> Corpus:
    corpus = Corpus()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(rec, dict) or "doc_id" not in rec:
                raise ParseError(path, line_no, "record must be an object with a doc_id field")
            try:
                doc = Document(
                    doc_id=str(rec["doc_id"]),
                    title=str(rec.get("title", "") or ""),
                    abstract=str(rec.get("abstract", "") or ""),
                )
                corpus.add(doc)
            except ConflictError as exc:
                raise ConflictError(f"{path}:{line_no}: {exc}") from exc
            except ValidationError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
    return corpus


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps(
                {"doc_id": doc.doc_id, "title": doc.title, "abstract": doc.abstract},
                sort_keys=True, ensure_ascii=False,
            ) + "\n")


@dataclass(frozen=True)
class QbeQuery:
    """A seed document acting as the query."""

    query_id: str
    doc_id: str


@dataclass(frozen=True)
class CandidatePool:
    query_id: str
    candidates: tuple[str, ...]

    def __post_init__(self):
        if not self.candidates:
            raise ValidationError(f"query {self.query_id!r} has an empty candidate pool")
        if len(set(self.candidates)) != len(self.candidates):
            raise ConflictError(f"query {self.query_id!r} has duplicate candidates")


def load_pools(path, corpus: Corpus | None = None) -> dict[str, CandidatePool]:
    """Load candidate pools; doc_ids are resolved against ``corpus`` eagerly."""
    pools: dict[str, CandidatePool] = {}
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
                qid = str(rec["query_id"])
                candidates = tuple(str(c) for c in rec["candidates"])
            except (KeyError, TypeError) as exc:
                raise ParseError(path, line_no, "record needs query_id and candidates") from exc
            if qid in pools:
                raise ConflictError(f"{path}:{line_no}: duplicate pool for query {qid!r}")
            try:
                pool = CandidatePool(qid, candidates)
            except ConflictError as exc:
                raise ConflictError(f"{path}:{line_no}: {exc}") from exc
            except ValidationError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            if corpus is not None:
                missing = [c for c in candidates if c not in corpus]
                if missing:
                    raise ValidationError(
                        f"{path}:{line_no}: query {qid!r} references unknown doc_ids {missing[:5]}"
                    )
            pools[qid] = pool
    return pools


@dataclass(frozen=True)
class RelevanceJudgment:
    query_id: str
    doc_id: str
    grade: int

    def __post_init__(self):
        if self.grade not in (0, 1):
            raise ValidationError(
                f"judgment ({self.query_id!r}, {self.doc_id!r}) has grade {self.grade}; expected 0 or 1"
            )


def load_qrels(path, corpus: Corpus | None = None) -> dict[str, dict[str, int]]:
    """Load TREC qrels into query_id -> doc_id -> grade."""
    qrels: dict[str, dict[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            cols = line.split()
            if len(cols) != 4:
                raise ParseError(path, line_no, f"expected 4 columns, got {len(cols)}")
            qid, _iter, doc_id, grade_s = cols
            try:
                grade = int(grade_s)
            except ValueError as exc:
                raise ParseError(path, line_no, f"grade {grade_s!r} is not an integer") from exc
            try:
                judgment = RelevanceJudgment(qid, doc_id, grade)
            except ValidationError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            per_query = qrels.setdefault(qid, {})
            if doc_id in per_query:
                raise ConflictError(f"{path}:{line_no}: duplicate judgment for ({qid!r}, {doc_id!r})")
            if corpus is not None and doc_id not in corpus:
                raise ValidationError(f"{path}:{line_no}: judgment references unknown doc_id {doc_id!r}")
            per_query[doc_id] = judgment.grade
    return qrels


def write_qrels(qrels: Mapping[str, Mapping[str, int]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(qrels):
            for doc_id in sorted(qrels[qid]):
                fh.write(f"{qid} 0 {doc_id} {qrels[qid][doc_id]}\n")


@dataclass(frozen=True)
class DatasetSplit:
    train_query_ids: frozenset[str]
    validation_query_ids: frozenset[str]
    seed: int


def split_validation(query_ids: Sequence[str], train_fraction: float, seed: int) -> DatasetSplit:
    """Seeded shuffle then prefix split; |train| = floor(fraction * n)."""
    if not query_ids:
        raise ValidationError("cannot split an empty query set")
    if not 0 < train_fraction < 1:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    ids = list(query_ids)
    random.Random(seed).shuffle(ids)
    n_train = math.floor(train_fraction * len(ids))
    return DatasetSplit(
        train_query_ids=frozenset(ids[:n_train]),
        validation_query_ids=frozenset(ids[n_train:]),
        seed=seed,
    )


@dataclass(frozen=True)
class TrainingTriplet:
    query_id: str
    positive_doc_id: str
    negative_doc_id: str


def make_triplets(
    query_id: str,
    judgments: Mapping[str, int],
    negatives_per_positive: int,
    seed: int,
) -> list[TrainingTriplet]:
    """Pair each positive with sampled negatives.

    Negatives are sampled without replacement per positive; replacement is
    used only when the negative pool is smaller than the requested count.
    """
    if negatives_per_positive < 1:
        raise ValidationError("negatives_per_positive must be >= 1")
    positives = sorted(d for d, g in judgments.items() if g == 1)
    negatives = sorted(d for d, g in judgments.items() if g == 0)
    if not positives:
        return []
    if not negatives:
        raise ValidationError(f"query {query_id!r} has positives but no negatives to sample")
    rng = random.Random(seed)
    triplets = []
    for pos in positives:
        if len(negatives) >= negatives_per_positive:
            chosen = rng.sample(negatives, negatives_per_positive)
        else:
            chosen = [rng.choice(negatives) for _ in range(negatives_per_positive)]
        triplets.extend(TrainingTriplet(query_id, pos, neg) for neg in chosen)
    return triplets


def write_triplets(triplets: Iterable[TrainingTriplet], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(f"{t.query_id}\t{t.positive_doc_id}\t{t.negative_doc_id}\n")
