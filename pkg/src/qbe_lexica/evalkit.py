"""Ranking metrics, paired significance testing, and run-file IO.

Metrics use binary relevance: judged grade > 0 is relevant, anything
unjudged counts as non-relevant. Run files are the 6-column whitespace
format ``query_id Q0 doc_id rank score tag``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, NamedTuple

from scipy.stats import t as t_distribution

from .errors import AlignmentError, ParseError, ValidationError
from .rankers import ScoredList

log = logging.getLogger(__name__)


class MetricKind(str, Enum):
    MAP = "map"
    NDCG = "ndcg"


def _relevant_set(qrels_for_query: Mapping[str, int]) -> set[str]:
    relevant = {d for d, g in qrels_for_query.items() if g > 0}
    if not relevant:
        raise ValidationError("query has no relevant documents judged")
    return relevant


def average_precision(ranking: ScoredList, qrels_for_query: Mapping[str, int]) -> float:
    relevant = _relevant_set(qrels_for_query)
    hits = 0
    total = 0.0
    for rank, (doc_id, _score) in enumerate(ranking.entries, start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def ndcg(ranking: ScoredList, qrels_for_query: Mapping[str, int]) -> float:
    relevant = _relevant_set(qrels_for_query)
    dcg = 0.0
    for rank, (doc_id, _score) in enumerate(ranking.entries, start=1):
        if doc_id in relevant:
            dcg += 1.0 / math.log2(rank + 1)
    ideal_hits = min(len(relevant), len(ranking.entries))
    idcg = sum(1.0 / math.log2(r + 1) for r in range(1, ideal_hits + 1))
    return dcg / idcg


def per_query_metric(
    metric: MetricKind, ranking: ScoredList, qrels_for_query: Mapping[str, int]
) -> float:
    if metric == MetricKind.MAP:
        return average_precision(ranking, qrels_for_query)
    return ndcg(ranking, qrels_for_query)


def aggregate(per_query: Mapping[str, float]) -> float:
    if not per_query:
        raise ValidationError("cannot aggregate an empty metric map")
    return sum(per_query.values()) / len(per_query)


class TTestResult(NamedTuple):
    t: float
    p: float
    degenerate: bool = False


def paired_t_test(a: Mapping[str, float], b: Mapping[str, float]) -> TTestResult:
    """Two-sided paired t-test over per-query values keyed by query_id.

    Zero-variance differences are degenerate: p = 1 when the systems are
    identical, p = 0 when one is uniformly shifted.
    """
    if set(a) != set(b):
        diff = sorted(set(a) ^ set(b))
        raise AlignmentError(f"query sets differ; symmetric difference: {diff[:10]}")
    if len(a) < 2:
        raise ValidationError("paired t-test needs at least 2 queries")
    diffs = [a[q] - b[q] for q in sorted(a)]
    n = len(diffs)
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0, degenerate=True)
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0, degenerate=True)
    t_stat = mean / (sd / math.sqrt(n))
    p = 2.0 * float(t_distribution.sf(abs(t_stat), n - 1))
    return TTestResult(t=t_stat, p=min(p, 1.0))


def bonferroni(p: float, num_comparisons: int) -> float:
    if not 0 <= p <= 1:
        raise ValidationError(f"p-value must be in [0, 1], got {p}")
    if num_comparisons < 1:
        raise ValidationError(f"num_comparisons must be >= 1, got {num_comparisons}")
    return min(1.0, p * num_comparisons)


@dataclass(frozen=True)
class SignificanceReport:
    system_a: str
    system_b: str
    t_statistic: float
    p_value: float
    num_comparisons: int
    adjusted_p: float
    significant: bool
    degenerate: bool = False


def compare_systems(
    system_a: str,
    a: Mapping[str, float],
    system_b: str,
    b: Mapping[str, float],
    num_comparisons: int = 1,
    alpha: float = 0.05,
) -> SignificanceReport:
    result = paired_t_test(a, b)
    adjusted = bonferroni(result.p, num_comparisons)
    return SignificanceReport(
        system_a=system_a,
        system_b=system_b,
        t_statistic=result.t,
        p_value=result.p,
        num_comparisons=num_comparisons,
        adjusted_p=adjusted,
        significant=adjusted < alpha,
        degenerate=result.degenerate,
    )


def write_run(lists: Mapping[str, ScoredList], path, tag: str = "run") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_run(lists, tag))


def format_run(lists: Mapping[str, ScoredList], tag: str = "run") -> str:
    lines = []
    for qid in sorted(lists):
        for rank, (doc_id, score) in enumerate(lists[qid].entries, start=1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {score:.6f} {tag}")
    return "\n".join(lines) + ("\n" if lines else "")


def read_run(path) -> dict[str, ScoredList]:
    """Parse a run file back into per-query scored lists.

    File order is trusted when ranks are contiguous from 1; otherwise the
    query is re-ranked by score with a warning.
    """
    rows: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            cols = line.split()
            if len(cols) != 6:
                raise ParseError(path, line_no, f"expected 6 columns, got {len(cols)}")
            qid, _q0, doc_id, rank_s, score_s, _tag = cols
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError as exc:
                raise ParseError(path, line_no, f"bad rank/score: {exc}") from exc
            per_query = rows.setdefault(qid, [])
            if any(doc_id == d for _, d, _s in per_query):
                raise ParseError(path, line_no, f"duplicate doc {doc_id!r} for query {qid!r}")
            per_query.append((rank, doc_id, score))
    lists: dict[str, ScoredList] = {}
    for qid, entries in rows.items():
        ranks = [r for r, _, _ in entries]
        if ranks != list(range(1, len(entries) + 1)):
            log.warning("run %s query %s: ranks not contiguous, re-ranking by score", path, qid)
            lists[qid] = ScoredList.from_scores(qid, {d: s for _, d, s in entries})
        else:
            lists[qid] = ScoredList(qid, tuple((d, s) for _, d, s in entries))
    return lists
