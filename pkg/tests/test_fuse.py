import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbe_lexica.errors import AlignmentError, ValidationError
from qbe_lexica.evalkit import MetricKind, average_precision, per_query_metric
from qbe_lexica.fuse import (
    DEFAULT_GRID,
    AlphaGrid,
    interpolate,
    interpolate_all,
    iqr,
    oracle_sweep,
    tune_alpha,
    z_scale,
)
from qbe_lexica.rankers import ScoredList


def scored(qid, mapping):
    return ScoredList.from_scores(qid, mapping)


class TestZScale:
    def test_basic(self):
        got = z_scale([1.0, 2.0, 3.0])
        assert got == pytest.approx([-1.224745, 0.0, 1.224745], abs=1e-6)

    def test_zero_variance(self):
        assert z_scale([5.0, 5.0, 5.0]) == [0.0, 0.0, 0.0]

    def test_singleton(self):
        assert z_scale([42.0]) == [0.0]

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            z_scale([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40))
    def test_mean_zero_std_one(self, scores):
        out = z_scale(scores)
        in_mean = sum(scores) / len(scores)
        in_var = sum((s - in_mean) ** 2 for s in scores) / len(scores)
        if in_var == 0.0 or all(s == scores[0] for s in scores):
            assert out == [0.0] * len(scores)
            return
        mean = sum(out) / len(out)
        var = sum((x - mean) ** 2 for x in out) / len(out)
        assert abs(mean) < 1e-9
        assert var == pytest.approx(1.0, rel=1e-6)


class TestAlphaGrid:
    def test_default_has_eleven_values(self):
        assert len(DEFAULT_GRID.values) == 11
        assert DEFAULT_GRID.values[0] == 0.0
        assert DEFAULT_GRID.values[-1] == 1.0

    def test_step_construction(self):
        grid = AlphaGrid.with_step(0.25)
        assert grid.values == (0.0, 0.25, 0.5, 0.75, 1.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            AlphaGrid(values=(0.5, 0.2))
        with pytest.raises(ValidationError):
            AlphaGrid(values=(0.0, 1.5))


def random_pair(rng, qid="q", n=30):
    docs = [f"d{i:02d}" for i in range(n)]
    bm25 = scored(qid, {d: rng.random() for d in docs})
    ctx = scored(qid, {d: rng.random() for d in docs})
    return bm25, ctx


class TestInterpolate:
    def test_alpha_one_reproduces_bm25_permutation(self):
        rng = random.Random(17)
        for _ in range(50):
            bm25, ctx = random_pair(rng)
            assert interpolate(bm25, ctx, 1.0).doc_ids() == bm25.doc_ids()

    def test_alpha_zero_reproduces_ctx_permutation(self):
        rng = random.Random(18)
        for _ in range(50):
            bm25, ctx = random_pair(rng)
            assert interpolate(bm25, ctx, 0.0).doc_ids() == ctx.doc_ids()

    def test_symmetric_scores_tie_break(self):
        bm25 = scored("q", {"d1": 3.0, "d2": 2.0, "d3": 1.0})
        ctx = scored("q", {"d1": 1.0, "d2": 2.0, "d3": 3.0})
        fused = interpolate(bm25, ctx, 0.5)
        assert [s for _, s in fused.entries] == [0.0, 0.0, 0.0]
        assert fused.doc_ids() == ["d1", "d2", "d3"]

    def test_candidate_mismatch_lists_symmetric_difference(self):
        bm25 = scored("q", {"d1": 1.0, "d2": 0.5})
        ctx = scored("q", {"d1": 1.0, "d3": 0.5})
        with pytest.raises(AlignmentError, match="d2.*d3"):
            interpolate(bm25, ctx, 0.5)

    def test_alpha_out_of_range(self):
        bm25 = scored("q", {"d1": 1.0, "d2": 0.5})
        with pytest.raises(ValidationError):
            interpolate(bm25, bm25, 1.5)

    def test_positive_affine_invariance(self):
        rng = random.Random(23)
        for _ in range(25):
            bm25, ctx = random_pair(rng, n=12)
            a, b = rng.uniform(0.1, 5.0), rng.uniform(-10, 10)
            bm25_t = scored("q", {d: a * s + b for d, s in bm25.entries})
            alpha = rng.choice(DEFAULT_GRID.values)
            assert (
                interpolate(bm25_t, ctx, alpha).doc_ids()
                == interpolate(bm25, ctx, alpha).doc_ids()
            )

    def test_global_scope_preserves_endpoint_permutations(self):
        rng = random.Random(29)
        bm25_lists = {}
        ctx_lists = {}
        for q in range(5):
            bm25, ctx = random_pair(rng, qid=f"q{q}", n=10)
            bm25_lists[f"q{q}"] = bm25
            ctx_lists[f"q{q}"] = ctx
        fused = interpolate_all(bm25_lists, ctx_lists, 1.0, z_scope="global")
        for qid in bm25_lists:
            assert fused[qid].doc_ids() == bm25_lists[qid].doc_ids()


def complementary_query(qid):
    """Positives split across the two rankers; a balanced mix rescues both."""
    bm25 = scored(qid, {"p1": 10.0, "p2": 0.0, "n1": 4.0, "n2": 3.0, "n3": 2.0, "n4": 1.0})
    ctx = scored(qid, {"p2": 10.0, "p1": 0.0, "n1": 4.0, "n2": 3.0, "n3": 2.0, "n4": 1.0})
    qrels = {"p1": 1, "p2": 1, "n1": 0, "n2": 0, "n3": 0, "n4": 0}
    return bm25, ctx, qrels


def ctx_perfect_query(qid):
    bm25 = scored(qid, {"p1": 0.0, "p2": 1.0, "n1": 9.0, "n2": 8.0})
    ctx = scored(qid, {"p1": 9.0, "p2": 8.0, "n1": 1.0, "n2": 0.0})
    qrels = {"p1": 1, "p2": 1, "n1": 0, "n2": 0}
    return bm25, ctx, qrels


def bm25_only_query(qid):
    """Near-tied positive/negative under bm25; any ctx weight flips them."""
    bm25 = scored(qid, {"p1": 100.0, "p2": 50.001, "n1": 50.0, "n2": 0.0, "n3": -50.0, "n4": -100.0})
    ctx = scored(qid, {"n1": 100.0, "p1": 0.0, "p2": 0.0, "n2": 0.0, "n3": 0.0, "n4": 0.0})
    qrels = {"p1": 1, "p2": 1, "n1": 0, "n2": 0, "n3": 0, "n4": 0}
    return bm25, ctx, qrels


def brute_force_best_alpha(bm25, ctx, qrels, grid, metric=MetricKind.MAP):
    """Smallest grid alpha with the maximum per-query metric, by enumeration."""
    best_alpha, best = None, -math.inf
    for alpha in grid.values:
        value = per_query_metric(metric, interpolate(bm25, ctx, alpha), qrels)
        if value > best:
            best_alpha, best = alpha, value
    return best_alpha, best


class TestTuneAlpha:
    def test_ctx_dominant_endpoint(self):
        bm25, ctx, qrels = ctx_perfect_query("q1")
        got = tune_alpha({"q1": bm25}, {"q1": ctx}, {"q1": qrels}, AlphaGrid(values=(0.0, 1.0)))
        assert got == 0.0

    def test_all_ties_pick_smallest(self):
        # identical lists: every alpha yields the identical ranking
        sl = scored("q1", {"p1": 2.0, "n1": 1.0})
        got = tune_alpha({"q1": sl}, {"q1": sl}, {"q1": {"p1": 1, "n1": 0}}, DEFAULT_GRID)
        assert got == 0.0

    def test_interior_alpha_wins(self):
        bm25_lists, ctx_lists, qrels = {}, {}, {}
        for qid in ("q1", "q2"):
            b, c, j = complementary_query(qid)
            bm25_lists[qid], ctx_lists[qid], qrels[qid] = b, c, j
        got = tune_alpha(bm25_lists, ctx_lists, qrels, DEFAULT_GRID, MetricKind.MAP)
        assert got == 0.5
        # cross-check against grid enumeration
        per_alpha = {}
        for alpha in DEFAULT_GRID.values:
            vals = [
                average_precision(interpolate(bm25_lists[q], ctx_lists[q], alpha), qrels[q])
                for q in sorted(qrels)
            ]
            per_alpha[alpha] = sum(vals) / len(vals)
        assert max(per_alpha, key=lambda a: (per_alpha[a], -a)) == 0.5
        assert per_alpha[0.5] > per_alpha[0.0]
        assert per_alpha[0.5] > per_alpha[1.0]

    def test_empty_validation_set(self):
        with pytest.raises(ValidationError):
            tune_alpha({}, {}, {}, DEFAULT_GRID)


class TestOracleSweep:
    def fixture(self):
        queries = {
            "qa": ctx_perfect_query("qa"),
            "qb": complementary_query("qb"),
            "qc": bm25_only_query("qc"),
        }
        bm25_lists = {q: v[0] for q, v in queries.items()}
        ctx_lists = {q: v[1] for q, v in queries.items()}
        qrels = {q: v[2] for q, v in queries.items()}
        return bm25_lists, ctx_lists, qrels

    def test_planted_optima(self):
        bm25_lists, ctx_lists, qrels = self.fixture()
        # validate the fixture itself by brute force before trusting it
        expect = {}
        for qid in qrels:
            expect[qid], _ = brute_force_best_alpha(
                bm25_lists[qid], ctx_lists[qid], qrels[qid], DEFAULT_GRID
            )
        assert expect == {"qa": 0.0, "qb": 0.5, "qc": 1.0}
        result = oracle_sweep(bm25_lists, ctx_lists, qrels, DEFAULT_GRID, MetricKind.MAP)
        assert result.per_query_alpha == expect
        assert result.alpha_average == pytest.approx(0.5)
        assert result.count_alpha_zero == 1
        assert result.count_alpha_one == 1
        assert result.alpha_iqr == pytest.approx(0.5)
        assert result.aggregate_metric == pytest.approx(
            sum(result.per_query_metric.values()) / 3
        )

    def test_degenerate_identical_rankers(self):
        sl1 = scored("q1", {"p1": 2.0, "n1": 1.0})
        sl2 = scored("q2", {"p1": 1.0, "n1": 2.0})
        result = oracle_sweep(
            {"q1": sl1, "q2": sl2},
            {"q1": sl1, "q2": sl2},
            {"q1": {"p1": 1, "n1": 0}, "q2": {"p1": 1, "n1": 0}},
            DEFAULT_GRID,
            MetricKind.MAP,
        )
        assert all(a == 0.0 for a in result.per_query_alpha.values())
        assert result.alpha_iqr == 0.0

    def test_dominance_over_fixed_alpha(self):
        rng = random.Random(31)
        bm25_lists, ctx_lists, qrels = {}, {}, {}
        for q in range(20):
            qid = f"q{q:02d}"
            bm25, ctx = random_pair(rng, qid=qid, n=10)
            docs = bm25.doc_ids()
            relevant = set(rng.sample(docs, 3))
            bm25_lists[qid], ctx_lists[qid] = bm25, ctx
            qrels[qid] = {d: (1 if d in relevant else 0) for d in docs}
        result = oracle_sweep(bm25_lists, ctx_lists, qrels, DEFAULT_GRID, MetricKind.MAP)
        for alpha in DEFAULT_GRID.values:
            values = [
                average_precision(interpolate(bm25_lists[q], ctx_lists[q], alpha), qrels[q])
                for q in sorted(qrels)
            ]
            assert result.aggregate_metric >= sum(values) / len(values)

    def test_alpha_values_stay_on_grid(self):
        bm25_lists, ctx_lists, qrels = self.fixture()
        result = oracle_sweep(bm25_lists, ctx_lists, qrels, DEFAULT_GRID, MetricKind.NDCG)
        assert all(a in DEFAULT_GRID.values for a in result.per_query_alpha.values())
        assert result.count_alpha_zero + result.count_alpha_one <= len(qrels)

    def test_query_set_mismatch(self):
        bm25_lists, ctx_lists, qrels = self.fixture()
        del ctx_lists["qa"]
        with pytest.raises(AlignmentError):
            oracle_sweep(bm25_lists, ctx_lists, qrels, DEFAULT_GRID, MetricKind.MAP)


class TestIqr:
    def test_type7_quartiles(self):
        assert iqr([1.0, 2.0, 3.0, 4.0]) == pytest.approx(1.5)

    def test_all_equal(self):
        assert iqr([2.0, 2.0, 2.0]) == 0.0

    def test_singleton(self):
        assert iqr([7.0]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            iqr([])
