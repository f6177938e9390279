"""Batch command-line surface for the reranking pipeline.

Subcommands: index, rerank, fuse, sweep, evaluate, expand, triplets,
significance. All outputs are written atomically (temp file + rename);
``--output -`` streams to stdout. Exit codes: 0 success, 1 usage error,
2 data/validation error, 3 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import tempfile
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evalkit, fuse, rankers
from .analysis import AnalyzerKind, AnalyzerSpec, build_analyzer
from .corpus import (
    TitleOrder,
    compose_text,
    load_corpus,
    load_pools,
    load_qrels,
    make_triplets,
    split_validation,
)
from .errors import EngineError, NotFoundError, ValidationError
from .evalkit import MetricKind
from .lexindex import (
    DEFAULT_FLOOR_LOGPROB,
    build_index,
    load_impact_store,
    load_index,
    load_tilde_store,
    persist_index,
)
from .wordpiece import load_vocabulary

log = logging.getLogger("qbe_lexica")

THREADS_ENV_VAR = "QBE_LEXICA_THREADS"


@contextlib.contextmanager
def atomic_output(path: str):
    """Yield a real path to write to; publish atomically on success."""
    if path == "-":
        fd, tmp = tempfile.mkstemp(prefix=".qbe-lexica-", suffix=".part")
        os.close(fd)
        try:
            yield tmp
            with open(tmp, encoding="utf-8") as fh:
                sys.stdout.write(fh.read())
        finally:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".qbe-lexica-", suffix=".part")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def resolve_threads(requested: int) -> int:
    if requested > 0:
        return requested
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValidationError(f"{THREADS_ENV_VAR}={env!r} is not an integer") from exc
        if value > 0:
            return value
    return min(8, os.cpu_count() or 1)


def _query_seed(seed: int, query_id: str) -> int:
    return seed ^ zlib.crc32(query_id.encode("utf-8"))


def _map_queries(worker, query_ids, threads: int):
    """Order-preserving per-query map, optionally on a thread pool.

    Work is handed out in contiguous chunks (one per worker) so results
    reassemble in input order regardless of scheduling.
    """
    query_ids = list(query_ids)
    if threads <= 1 or len(query_ids) <= 1:
        return [worker(qid) for qid in query_ids]
    chunk_size = (len(query_ids) + threads - 1) // threads
    chunks = [query_ids[i:i + chunk_size] for i in range(0, len(query_ids), chunk_size)]

    def run_chunk(chunk):
        return [worker(qid) for qid in chunk]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(run_chunk, chunks)
        return [item for chunk_result in results for item in chunk_result]


def _dump_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands


def cmd_index(args) -> int:
    corpus = load_corpus(args.corpus)
    spec = AnalyzerSpec(
        kind=AnalyzerKind(args.analyzer),
        vocab_path=args.vocab,
        lowercase=not args.no_lowercase,
        strip_accents=not args.keep_accents,
    )
    index = build_index(corpus, spec, TitleOrder(args.title_order))
    with atomic_output(args.output) as tmp:
        persist_index(index, tmp)
    log.info("indexed %d documents, %d terms", index.stats.num_docs, len(index.postings))
    return 0


def _subword_spec(args) -> AnalyzerSpec:
    return AnalyzerSpec(
        kind=AnalyzerKind.SUBWORD,
        vocab_path=args.vocab,
        lowercase=not args.no_lowercase,
        strip_accents=not args.keep_accents,
    )


def cmd_rerank(args) -> int:
    corpus = load_corpus(args.corpus)
    pools = load_pools(args.pools, corpus)
    title_order = TitleOrder(args.title_order)
    threads = resolve_threads(args.threads)

    for qid in pools:
        if qid not in corpus:
            raise NotFoundError(f"query {qid!r} has no seed document in the corpus")

    qids = sorted(pools)

    # queries are tokenized serially once; only scoring is distributed
    def prepared_queries(analyzer, as_ids: bool):
        prepared = {}
        for qid in qids:
            tokens = analyzer(compose_text(corpus[qid], title_order))
            prepared[qid] = [t.id for t in tokens] if as_ids else [t.surface for t in tokens]
        return prepared

    if args.scorer in ("bm25", "lmjm"):
        if not args.index:
            raise ValidationError(f"--index is required for scorer {args.scorer!r}")
        index = load_index(args.index)
        queries = prepared_queries(build_analyzer(index.analyzer), as_ids=False)
        if args.scorer == "bm25":
            params = rankers.Bm25Params(k1=args.k1, b=args.b)

            def score_query(qid):
                terms = queries[qid]
                return rankers.rerank(
                    qid, pools[qid].candidates,
                    lambda d: rankers.bm25_score(terms, d, index, params, args.multiplicity),
                )
        else:
            params = rankers.LmJmParams(lam=getattr(args, "lambda"))

            def score_query(qid):
                terms = queries[qid]
                return rankers.rerank(
                    qid, pools[qid].candidates,
                    lambda d: rankers.lm_jm_score(terms, d, index, params),
                )
    elif args.scorer == "tilde":
        if not (args.tilde_store and args.vocab):
            raise ValidationError("--tilde-store and --vocab are required for scorer 'tilde'")
        vocab = load_vocabulary(args.vocab)
        store = load_tilde_store(args.tilde_store, vocab_size=len(vocab), floor_logprob=args.floor_logprob)
        queries = prepared_queries(build_analyzer(_subword_spec(args)), as_ids=True)

        def score_query(qid):
            ids = queries[qid]
            return rankers.rerank(
                qid, pools[qid].candidates, lambda d: rankers.tilde_ql(ids, d, store)
            )
    elif args.scorer == "tildev2":
        if not (args.impact_store and args.vocab):
            raise ValidationError("--impact-store and --vocab are required for scorer 'tildev2'")
        vocab = load_vocabulary(args.vocab)
        store = load_impact_store(args.impact_store, vocab_size=len(vocab))
        queries = prepared_queries(build_analyzer(_subword_spec(args)), as_ids=True)

        def score_query(qid):
            ids = queries[qid]
            return rankers.rerank(
                qid, pools[qid].candidates, lambda d: rankers.tildev2_score(ids, d, store)
            )
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown scorer {args.scorer!r}")

    # warm the per-document term-frequency map before dispatch
    if args.scorer in ("bm25", "lmjm") and qids:
        index.doc_term_freqs(pools[qids[0]].candidates[0])
    lists = dict(zip(qids, _map_queries(score_query, qids, threads)))
    with atomic_output(args.output) as tmp:
        evalkit.write_run(lists, tmp, tag=args.tag)
    log.info("reranked %d queries with %s", len(lists), args.scorer)
    return 0


def cmd_fuse(args) -> int:
    bm25_lists = evalkit.read_run(args.bm25_run)
    ctx_lists = evalkit.read_run(args.ctx_run)
    fused = fuse.interpolate_all(bm25_lists, ctx_lists, args.alpha, z_scope=args.z_scope)
    with atomic_output(args.output) as tmp:
        evalkit.write_run(fused, tmp, tag=args.tag)
    log.info("fused %d queries at alpha=%g", len(fused), args.alpha)
    return 0


def _restrict(lists, ids):
    return {q: sl for q, sl in lists.items() if q in ids}


def cmd_sweep(args) -> int:
    bm25_lists = evalkit.read_run(args.bm25_run)
    ctx_lists = evalkit.read_run(args.ctx_run)
    qrels = load_qrels(args.qrels)
    if args.query_ids:
        wanted = {ln.strip() for ln in open(args.query_ids, encoding="utf-8") if ln.strip()}
        bm25_lists = _restrict(bm25_lists, wanted)
        ctx_lists = _restrict(ctx_lists, wanted)
    metric = MetricKind(args.metric)
    grid = fuse.AlphaGrid.with_step(args.grid_step)
    records = []
    if args.oracle:
        result = fuse.oracle_sweep(bm25_lists, ctx_lists, qrels, grid, metric)
        for qid in sorted(result.per_query_alpha):
            records.append({
                "query_id": qid,
                "alpha_star": result.per_query_alpha[qid],
                "metric_name": metric.value,
                "metric_value": result.per_query_metric[qid],
            })
        records.append({
            "query_id": "ALL",
            "metric_name": metric.value,
            "metric_value": result.aggregate_metric,
            "alpha_average": result.alpha_average,
            "count_alpha_zero": result.count_alpha_zero,
            "count_alpha_one": result.count_alpha_one,
            "alpha_iqr": result.alpha_iqr,
        })
        log.info(
            "oracle %s=%.6f alpha_avg=%.4f (n0=%d, n1=%d, iqr=%.2f)",
            metric.value, result.aggregate_metric, result.alpha_average,
            result.count_alpha_zero, result.count_alpha_one, result.alpha_iqr,
        )
    else:
        best_alpha, best_value = None, float("-inf")
        for alpha in grid.values:
            fused = fuse.interpolate_all(bm25_lists, ctx_lists, alpha, z_scope=args.z_scope)
            values = {}
            for qid in sorted(fused):
                value = evalkit.per_query_metric(metric, fused[qid], qrels[qid])
                values[qid] = value
                records.append({
                    "query_id": qid, "alpha": alpha,
                    "metric_name": metric.value, "metric_value": value,
                })
            agg = evalkit.aggregate(values)
            records.append({
                "query_id": "ALL", "alpha": alpha,
                "metric_name": metric.value, "metric_value": agg,
            })
            if agg > best_value:
                best_alpha, best_value = alpha, agg
        log.info("best fixed alpha=%g with %s=%.6f", best_alpha, metric.value, best_value)
    with atomic_output(args.output) as tmp:
        _dump_jsonl(records, tmp)
    return 0


def cmd_evaluate(args) -> int:
    lists = evalkit.read_run(args.run)
    qrels = load_qrels(args.qrels)
    metric = MetricKind(args.metric)
    records = []
    values = {}
    for qid in sorted(lists):
        if qid not in qrels:
            raise NotFoundError(f"query {qid!r} from the run has no judgments")
        value = evalkit.per_query_metric(metric, lists[qid], qrels[qid])
        values[qid] = value
        records.append({"query_id": qid, "metric": metric.value, "value": value})
    agg = evalkit.aggregate(values)
    records.append({"query_id": "ALL", "metric": metric.value, "value": agg})
    with atomic_output(args.output) as tmp:
        _dump_jsonl(records, tmp)
    log.info("%s over %d queries: %.6f", metric.value, len(values), agg)
    return 0


def cmd_expand(args) -> int:
    corpus = load_corpus(args.corpus)
    vocab = load_vocabulary(args.vocab)
    store = load_tilde_store(args.tilde_store, vocab_size=len(vocab), floor_logprob=args.floor_logprob)
    analyzer = build_analyzer(_subword_spec(args))
    config = rankers.ExpansionConfig(
        m=args.expansion_m,
        exclude_continuation_pieces=not args.include_continuation_pieces,
    )
    title_order = TitleOrder(args.title_order)
    records = []
    counts = {}
    for doc in sorted(corpus, key=lambda d: d.doc_id):
        doc_ids = {t.id for t in analyzer(compose_text(doc, title_order))}
        additions = rankers.expand_document(doc_ids, store.ranked_entries(doc.doc_id), config, vocab)
        counts[doc.doc_id] = len(additions)
        records.append({"doc_id": doc.doc_id, "added_token_ids": additions})
    mean_added, _ = rankers.expansion_stats(counts)
    with atomic_output(args.output) as tmp:
        _dump_jsonl(records, tmp)
    log.info("expanded %d documents, mean additions %.2f (m=%d)", len(records), mean_added, args.expansion_m)
    return 0


def cmd_triplets(args) -> int:
    qrels = load_qrels(args.qrels)
    qids = sorted(qrels)
    if args.split != "all":
        split = split_validation(qids, args.train_fraction, args.seed)
        keep = split.train_query_ids if args.split == "train" else split.validation_query_ids
        qids = [q for q in qids if q in keep]
    lines = []
    for qid in qids:
        triplets = make_triplets(
            qid, qrels[qid], args.negatives_per_positive, seed=_query_seed(args.seed, qid)
        )
        lines.extend(f"{t.query_id}\t{t.positive_doc_id}\t{t.negative_doc_id}" for t in triplets)
    with atomic_output(args.output) as tmp:
        Path(tmp).write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")
    log.info("wrote %d triplets for %d queries", len(lines), len(qids))
    return 0


def cmd_significance(args) -> int:
    run_a = evalkit.read_run(args.run_a)
    run_b = evalkit.read_run(args.run_b)
    qrels = load_qrels(args.qrels)
    metric = MetricKind(args.metric)

    def per_query(lists):
        return {
            qid: evalkit.per_query_metric(metric, lists[qid], qrels[qid])
            for qid in sorted(lists)
        }

    report = evalkit.compare_systems(
        args.name_a or args.run_a,
        per_query(run_a),
        args.name_b or args.run_b,
        per_query(run_b),
        num_comparisons=args.num_comparisons,
    )
    record = {
        "system_a": report.system_a,
        "system_b": report.system_b,
        "metric": metric.value,
        "t": report.t_statistic,
        "p": report.p_value,
        "num_comparisons": report.num_comparisons,
        "adjusted_p": report.adjusted_p,
        "significant": report.significant,
        "degenerate": report.degenerate,
    }
    with atomic_output(args.output) as tmp:
        _dump_jsonl([record], tmp)
    log.info("t=%.6f p=%.6g adjusted_p=%.6g significant=%s",
             report.t_statistic, report.p_value, report.adjusted_p, report.significant)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag defaults; command-line flags win")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=0,
                        help=f"worker threads; 0 = auto ({THREADS_ENV_VAR} or cpu count)")

    subword = argparse.ArgumentParser(add_help=False)
    subword.add_argument("--vocab", help="subword vocabulary file (one token per line)")
    subword.add_argument("--no-lowercase", action="store_true")
    subword.add_argument("--keep-accents", action="store_true")

    parser = argparse.ArgumentParser(
        prog="qbe-lexica",
        description="Query-by-example lexical reranking, fusion, and evaluation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("index", parents=[common, subword], help="build and persist an inverted index")
    p.add_argument("--corpus")
    p.add_argument("--analyzer", choices=[k.value for k in AnalyzerKind], default="sa")
    p.add_argument("--title-order", choices=[o.value for o in TitleOrder], default="title-first")
    p.add_argument("--output")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("rerank", parents=[common, subword], help="score candidate pools with one scorer")
    p.add_argument("--corpus")
    p.add_argument("--pools")
    p.add_argument("--scorer", choices=["bm25", "lmjm", "tilde", "tildev2"])
    p.add_argument("--index", help="persisted index (bm25/lmjm)")
    p.add_argument("--k1", type=float, default=2.75)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--lambda", type=float, default=0.1, dest="lambda")
    p.add_argument("--multiplicity", action="store_true",
                   help="weight BM25 terms by their query occurrence count")
    p.add_argument("--tilde-store")
    p.add_argument("--impact-store")
    p.add_argument("--floor-logprob", type=float, default=DEFAULT_FLOOR_LOGPROB)
    p.add_argument("--title-order", choices=[o.value for o in TitleOrder], default="title-first")
    p.add_argument("--tag", default="qbe-lexica")
    p.add_argument("--output")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("fuse", parents=[common], help="interpolate two runs at a fixed alpha")
    p.add_argument("--bm25-run")
    p.add_argument("--ctx-run")
    p.add_argument("--alpha", type=float)
    p.add_argument("--z-scope", choices=["query", "global"], default="query")
    p.add_argument("--tag", default="fused")
    p.add_argument("--output")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("sweep", parents=[common], help="evaluate an alpha grid or the per-query oracle")
    p.add_argument("--bm25-run")
    p.add_argument("--ctx-run")
    p.add_argument("--qrels")
    p.add_argument("--metric", choices=[m.value for m in MetricKind], default="map")
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--oracle", action="store_true", help="per-query best alpha instead of the grid report")
    p.add_argument("--query-ids", help="restrict to query ids listed in this file (one per line)")
    p.add_argument("--z-scope", choices=["query", "global"], default="query")
    p.add_argument("--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evaluate", parents=[common], help="score a run against judgments")
    p.add_argument("--run")
    p.add_argument("--qrels")
    p.add_argument("--metric", choices=[m.value for m in MetricKind], default="map")
    p.add_argument("--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("expand", parents=[common, subword], help="pick new expansion tokens per document")
    p.add_argument("--corpus")
    p.add_argument("--tilde-store")
    p.add_argument("--floor-logprob", type=float, default=DEFAULT_FLOOR_LOGPROB)
    p.add_argument("--expansion-m", type=int)
    p.add_argument("--include-continuation-pieces", action="store_true")
    p.add_argument("--title-order", choices=[o.value for o in TitleOrder], default="title-first")
    p.add_argument("--output")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("triplets", parents=[common], help="emit training triplets from judgments")
    p.add_argument("--qrels")
    p.add_argument("--negatives-per-positive", type=int, default=2)
    p.add_argument("--split", choices=["all", "train", "validation"], default="all")
    p.add_argument("--train-fraction", type=float, default=0.85)
    p.add_argument("--output")
    p.set_defaults(func=cmd_triplets)

    p = sub.add_parser("significance", parents=[common], help="paired t-test between two runs")
    p.add_argument("--run-a")
    p.add_argument("--run-b")
    p.add_argument("--qrels")
    p.add_argument("--metric", choices=[m.value for m in MetricKind], default="map")
    p.add_argument("--num-comparisons", type=int, default=1)
    p.add_argument("--name-a")
    p.add_argument("--name-b")
    p.add_argument("--output")
    p.set_defaults(func=cmd_significance)

    return parser


class UsageError(Exception):
    """Bad flag combination detected after config merging; exits 1."""


# flags that must be present per subcommand, via command line or config file
REQUIRED_FLAGS = {
    "index": ("corpus", "output"),
    "rerank": ("corpus", "pools", "scorer", "output"),
    "fuse": ("bm25_run", "ctx_run", "alpha", "output"),
    "sweep": ("bm25_run", "ctx_run", "qrels", "output"),
    "evaluate": ("run", "qrels", "output"),
    "expand": ("corpus", "tilde_store", "expansion_m", "output"),
    "triplets": ("qrels", "output"),
    "significance": ("run_a", "run_b", "qrels", "output"),
}


def _check_required(args) -> None:
    missing = [
        "--" + attr.replace("_", "-")
        for attr in REQUIRED_FLAGS[args.subcommand]
        if getattr(args, attr, None) is None
    ]
    if missing:
        raise UsageError(
            f"{args.subcommand}: missing required arguments: {', '.join(missing)}"
        )


def _apply_config(args, argv) -> None:
    if not args.config:
        return
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValidationError(f"{args.config}: config must be a JSON object")
    explicit = set()
    for tok in argv:
        if tok.startswith("--"):
            explicit.add(tok[2:].split("=", 1)[0].replace("-", "_"))
    for key, value in config.items():
        attr = key.replace("-", "_")
        if attr in explicit:
            continue
        if not hasattr(args, attr):
            raise ValidationError(f"{args.config}: unknown option {key!r}")
        setattr(args, attr, value)


def run(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        _apply_config(args, argv)
        _check_required(args)
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return 1
    except EngineError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2
    except Exception:  # noqa: BLE001 - the CLI boundary reports and exits 3
        log.exception("internal error")
        return 3


def main() -> None:
    sys.exit(run())
