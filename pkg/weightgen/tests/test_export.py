import json
import math

import pytest

from weightgen.export import ConfigError, ExportConfig, StoreKind, WeightExporter
from conftest import VOCAB


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(ln) for ln in fh if ln.strip()]


@pytest.fixture(scope="module")
def exporter(checkpoint):
    return WeightExporter(ExportConfig(model_name=checkpoint, top_k=10, batch_size=4, seed=42))


class TestTildeExport:
    def test_entries_are_nonpositive_and_sorted(self, exporter, corpus_path, tmp_path):
        out = tmp_path / "tilde.jsonl"
        n = exporter.export_tilde(corpus_path, out)
        records = read_jsonl(out)
        assert "floor_logprob" in records[0]
        assert records[0]["floor_logprob"] <= 0
        assert n == len(records) - 1
        for rec in records[1:]:
            logprobs = [lp for _, lp in rec["entries"]]
            assert all(lp <= 0 for lp in logprobs)
            assert logprobs == sorted(logprobs, reverse=True)
            assert len(rec["entries"]) == 10
            ids = [t for t, _ in rec["entries"]]
            assert len(set(ids)) == len(ids)
            assert all(0 <= t < len(VOCAB) for t in ids)

    def test_floor_bounds_all_dropped_entries(self, exporter, corpus_path, tmp_path):
        sparse = tmp_path / "sparse.jsonl"
        dense = tmp_path / "dense.jsonl"
        exporter.export_tilde(corpus_path, sparse, top_k=10)
        exporter.export_tilde(corpus_path, dense, top_k=len(VOCAB))
        floor = read_jsonl(sparse)[0]["floor_logprob"]
        kept = {rec["doc_id"]: {t for t, _ in rec["entries"]} for rec in read_jsonl(sparse)[1:]}
        for rec in read_jsonl(dense)[1:]:
            for token_id, lp in rec["entries"]:
                if token_id not in kept[rec["doc_id"]]:
                    assert lp <= floor + 1e-12

    def test_unsparsified_distribution_sums_to_one(self, exporter, corpus_path, tmp_path):
        out = tmp_path / "dense.jsonl"
        exporter.export_tilde(corpus_path, out, top_k=len(VOCAB))
        for rec in read_jsonl(out)[1:]:
            assert len(rec["entries"]) == len(VOCAB)
            total = sum(math.exp(lp) for _, lp in rec["entries"])
            assert total == pytest.approx(1.0, abs=1e-4)

    def test_deterministic_byte_identical(self, checkpoint, corpus_path, tmp_path):
        outputs = []
        for name in ("a", "b"):
            exporter = WeightExporter(
                ExportConfig(model_name=checkpoint, top_k=16, batch_size=3, seed=7)
            )
            out = tmp_path / f"{name}.jsonl"
            exporter.export_tilde(corpus_path, out)
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_mean_pool_differs_from_cls(self, checkpoint, corpus_path, tmp_path):
        cls_out = tmp_path / "cls.jsonl"
        mean_out = tmp_path / "mean.jsonl"
        WeightExporter(ExportConfig(model_name=checkpoint)).export_tilde(corpus_path, cls_out)
        WeightExporter(ExportConfig(model_name=checkpoint, mean_pool=True)).export_tilde(
            corpus_path, mean_out)
        assert cls_out.read_bytes() != mean_out.read_bytes()


class TestImpactExport:
    def test_weights_nonnegative_and_only_document_tokens(self, exporter, corpus_path, tmp_path):
        out = tmp_path / "impacts.jsonl"
        exporter.export_impacts(corpus_path, out)
        token_of = {t: i for i, t in enumerate(VOCAB)}
        docs = {json.loads(ln)["doc_id"]: json.loads(ln) for ln in open(corpus_path)}
        for rec in read_jsonl(out):
            doc = docs[rec["doc_id"]]
            present = {token_of[w] for w in (doc["title"] + " " + doc["abstract"]).split()}
            for token_id, w in rec["weights"]:
                assert w >= 0.0
                assert token_id in present

    def test_untrained_projection_is_flagged(self, checkpoint, corpus_path, tmp_path, caplog):
        exporter = WeightExporter(ExportConfig(
            model_name=checkpoint, store_kind=StoreKind.IMPACT, seed=11))
        with caplog.at_level("WARNING", logger="weightgen"):
            exporter.export_impacts(corpus_path, tmp_path / "impacts.jsonl")
        assert any("UNTRAINED" in rec.message for rec in caplog.records)

    def test_deterministic(self, checkpoint, corpus_path, tmp_path):
        outputs = []
        for name in ("a", "b"):
            exporter = WeightExporter(ExportConfig(model_name=checkpoint, seed=3))
            out = tmp_path / f"{name}.jsonl"
            exporter.export_impacts(corpus_path, out)
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]


class TestExpansionExport:
    def test_lists_are_ranked_and_bounded(self, exporter, corpus_path, tmp_path):
        out = tmp_path / "expansion.jsonl"
        exporter.export_expansion_lists(corpus_path, out, m=7)
        for rec in read_jsonl(out):
            logprobs = [lp for _, lp in rec["entries"]]
            assert len(logprobs) <= 7
            assert logprobs == sorted(logprobs, reverse=True)


class TestConfig:
    def test_top_k_validated(self, checkpoint):
        with pytest.raises(ConfigError):
            ExportConfig(model_name=checkpoint, top_k=0)

    def test_positional_limit_enforced(self, checkpoint):
        with pytest.raises(ConfigError):
            WeightExporter(ExportConfig(model_name=checkpoint, max_doc_tokens=9999))

    def test_missing_model_is_config_error(self):
        with pytest.raises(ConfigError):
            WeightExporter(ExportConfig(model_name="/nonexistent/model"))

    def test_truncation_warns(self, checkpoint, tmp_path, caplog):
        corpus = tmp_path / "long.jsonl"
        corpus.write_text(json.dumps({
            "doc_id": "long1", "title": "alpha", "abstract": " ".join(["beta"] * 200),
        }) + "\n", encoding="utf-8")
        exporter = WeightExporter(ExportConfig(model_name=checkpoint, max_doc_tokens=16))
        with caplog.at_level("WARNING", logger="weightgen"):
            exporter.export_tilde(corpus, tmp_path / "out.jsonl")
        assert any("truncated" in rec.message for rec in caplog.records)
