"""Query-by-example lexical reranking engine.

Reranks candidate pools for document-length queries with BM25, a smoothed
language model, and precomputed contextualized term-weight scorers, fuses
scores by z-scaled linear interpolation, and evaluates rankings with
MAP/nDCG and paired significance tests.
"""

from .analysis import AnalyzerKind, AnalyzerSpec, analyze, unique_token_counts
from .corpus import (
    CandidatePool,
    Corpus,
    DatasetSplit,
    Document,
    QbeQuery,
    RelevanceJudgment,
    TitleOrder,
    TrainingTriplet,
    compose_text,
    load_corpus,
    load_pools,
    load_qrels,
    make_triplets,
    split_validation,
    write_corpus,
)
from .evalkit import (
    MetricKind,
    SignificanceReport,
    aggregate,
    average_precision,
    bonferroni,
    ndcg,
    paired_t_test,
    read_run,
    write_run,
)
from .fuse import AlphaGrid, OracleResult, interpolate, iqr, oracle_sweep, tune_alpha, z_scale
from .lexindex import (
    ImpactStore,
    IndexStats,
    InvertedIndex,
    TildeDistributionStore,
    build_index,
    load_impact_store,
    load_index,
    load_tilde_store,
    persist_index,
)
from .porter import porter_stem
from .rankers import (
    Bm25Params,
    ExpansionConfig,
    LmJmParams,
    ScoredList,
    bm25_score,
    expand_document,
    expansion_stats,
    lm_jm_score,
    rerank,
    tilde_ql,
    tildev2_score,
)
from .wordpiece import Token, Vocabulary, load_vocabulary, wordpiece_tokenize

__version__ = "0.1.0"
