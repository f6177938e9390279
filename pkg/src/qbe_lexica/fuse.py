"""Score normalization, linear interpolation, and per-query oracle sweeps.

Scores from the two rankers are z-scaled per query (population standard
deviation) before the convex combination
``alpha * z(bm25) + (1 - alpha) * z(contextualized)``. A ``global`` scaling
scope is available for sensitivity analysis; it pools score statistics
over all queries of a run instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import AlignmentError, ValidationError
from .evalkit import MetricKind, per_query_metric
from .rankers import ScoredList


@dataclass(frozen=True)
class AlphaGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValidationError("alpha grid is empty")
        if any(not 0 <= v <= 1 for v in self.values):
            raise ValidationError("alpha grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValidationError("alpha grid must be strictly increasing")

    @classmethod
    def with_step(cls, step: float = 0.1) -> "AlphaGrid":
        if not 0 < step <= 1:
            raise ValidationError(f"grid step must be in (0, 1], got {step}")
        n = round(1.0 / step)
        values = tuple(round(i * step, 10) for i in range(n))
        return cls(values=values + (1.0,))


DEFAULT_GRID = AlphaGrid.with_step(0.1)


def z_scale(scores: Sequence[float]) -> list[float]:
    """Subtract the mean, divide by the population standard deviation.

    A zero-variance list maps to all zeros so constant scorers fuse
    gracefully.
    """
    if len(scores) == 0:
        raise ValidationError("cannot z-scale an empty score list")
    n = len(scores)
    first = scores[0]
    if all(s == first for s in scores):
        # constant input; mean subtraction could otherwise leave identical
        # nonzero rounding residuals
        return [0.0] * n
    mean = sum(scores) / n
    var = sum((s - mean) ** 2 for s in scores) / n
    if var == 0.0:
        return [0.0] * n
    std = math.sqrt(var)
    return [(s - mean) / std for s in scores]


def _check_alignment(bm25: ScoredList, ctx: ScoredList) -> None:
    docs_a = {d for d, _ in bm25.entries}
    docs_b = {d for d, _ in ctx.entries}
    if bm25.query_id != ctx.query_id:
        raise AlignmentError(f"query ids differ: {bm25.query_id!r} vs {ctx.query_id!r}")
    if docs_a != docs_b:
        diff = sorted(docs_a ^ docs_b)
        raise AlignmentError(
            f"query {bm25.query_id!r}: candidate sets differ; symmetric difference: {diff}"
        )


def interpolate(bm25: ScoredList, ctx: ScoredList, alpha: float) -> ScoredList:
    """Fuse two scored lists over the same candidates at a fixed alpha."""
    if not 0 <= alpha <= 1:
        raise ValidationError(f"alpha must be in [0, 1], got {alpha}")
    _check_alignment(bm25, ctx)
    z_bm25 = dict(zip(bm25.doc_ids(), z_scale([s for _, s in bm25.entries])))
    z_ctx = dict(zip(ctx.doc_ids(), z_scale([s for _, s in ctx.entries])))
    fused = {
        doc: alpha * z_bm25[doc] + (1.0 - alpha) * z_ctx[doc]
        for doc in z_bm25
    }
    return ScoredList.from_scores(bm25.query_id, fused)


def _global_scaled(lists: Mapping[str, ScoredList]) -> dict[str, dict[str, float]]:
    pooled = [s for sl in lists.values() for _, s in sl.entries]
    scaled = z_scale(pooled)
    out: dict[str, dict[str, float]] = {}
    i = 0
    for qid, sl in lists.items():
        per_doc = {}
        for doc, _ in sl.entries:
            per_doc[doc] = scaled[i]
            i += 1
        out[qid] = per_doc
    return out


def interpolate_all(
    bm25_lists: Mapping[str, ScoredList],
    ctx_lists: Mapping[str, ScoredList],
    alpha: float,
    z_scope: str = "query",
) -> dict[str, ScoredList]:
    """Fuse every query of two runs; scaling statistics follow ``z_scope``."""
    if set(bm25_lists) != set(ctx_lists):
        diff = sorted(set(bm25_lists) ^ set(ctx_lists))
        raise AlignmentError(f"runs cover different queries; symmetric difference: {diff[:10]}")
    if z_scope == "query":
        return {qid: interpolate(bm25_lists[qid], ctx_lists[qid], alpha) for qid in sorted(bm25_lists)}
    if z_scope != "global":
        raise ValidationError(f"unknown z scope {z_scope!r}")
    zb = _global_scaled(bm25_lists)
    zc = _global_scaled(ctx_lists)
    fused_all: dict[str, ScoredList] = {}
    for qid in sorted(bm25_lists):
        _check_alignment(bm25_lists[qid], ctx_lists[qid])
        fused = {
            doc: alpha * zb[qid][doc] + (1.0 - alpha) * zc[qid][doc]
            for doc in zb[qid]
        }
        fused_all[qid] = ScoredList.from_scores(qid, fused)
    return fused_all


def tune_alpha(
    bm25_lists: Mapping[str, ScoredList],
    ctx_lists: Mapping[str, ScoredList],
    qrels: Mapping[str, Mapping[str, int]],
    grid: AlphaGrid = DEFAULT_GRID,
    metric: MetricKind = MetricKind.MAP,
    validation_ids: set[str] | None = None,
) -> float:
    """Pick the grid alpha maximizing the aggregate metric; ties go low."""
    qids = sorted(validation_ids) if validation_ids is not None else sorted(bm25_lists)
    if not qids:
        raise ValidationError("empty validation set")
    best_alpha = None
    best_value = -math.inf
    for alpha in grid.values:
        values = []
        for qid in qids:
            fused = interpolate(bm25_lists[qid], ctx_lists[qid], alpha)
            values.append(per_query_metric(metric, fused, qrels[qid]))
        agg = sum(values) / len(values)
        if agg > best_value:
            best_value = agg
            best_alpha = alpha
    return best_alpha


@dataclass(frozen=True)
class OracleResult:
    per_query_alpha: dict[str, float]
    per_query_metric: dict[str, float]
    aggregate_metric: float
    alpha_average: float
    count_alpha_zero: int
    count_alpha_one: int
    alpha_iqr: float


def oracle_sweep(
    bm25_lists: Mapping[str, ScoredList],
    ctx_lists: Mapping[str, ScoredList],
    qrels: Mapping[str, Mapping[str, int]],
    grid: AlphaGrid = DEFAULT_GRID,
    metric: MetricKind = MetricKind.MAP,
) -> OracleResult:
    """Best alpha per query (smallest maximizer) and its dispersion statistics."""
    if set(bm25_lists) != set(ctx_lists):
        diff = sorted(set(bm25_lists) ^ set(ctx_lists))
        raise AlignmentError(f"runs cover different queries; symmetric difference: {diff[:10]}")
    per_query_alpha: dict[str, float] = {}
    per_query_value: dict[str, float] = {}
    for qid in sorted(bm25_lists):
        best_alpha = None
        best_value = -math.inf
        for alpha in grid.values:
            fused = interpolate(bm25_lists[qid], ctx_lists[qid], alpha)
            value = per_query_metric(metric, fused, qrels[qid])
            if value > best_value:
                best_value = value
                best_alpha = alpha
        per_query_alpha[qid] = best_alpha
        per_query_value[qid] = best_value
    alphas = list(per_query_alpha.values())
    return OracleResult(
        per_query_alpha=per_query_alpha,
        per_query_metric=per_query_value,
        aggregate_metric=sum(per_query_value.values()) / len(per_query_value),
        alpha_average=sum(alphas) / len(alphas),
        count_alpha_zero=sum(1 for a in alphas if a == 0.0),
        count_alpha_one=sum(1 for a in alphas if a == 1.0),
        alpha_iqr=iqr(alphas),
    )


def iqr(values: Sequence[float], method: str = "linear") -> float:
    """Inter-quartile range with linearly interpolated quantiles."""
    if len(values) == 0:
        raise ValidationError("cannot take the IQR of an empty list")
    q1, q3 = np.quantile(np.asarray(values, dtype=float), [0.25, 0.75], method=method)
    return float(q3 - q1)
