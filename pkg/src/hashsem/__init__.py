"""Hashtag co-audience semantic networks as user features."""

from ._kernels import BACKEND
from .cohort import ImprovementRecord, OccurrenceRateRow, score_improvement, top_decile_rates
from .corpus import EMOTIONS, Corpus, CorpusError, InteractionKind, TweetRecord, ingest, user_tweet_count
from .enrich import EnrichmentMatrix, EnrichmentVector, baseline_vector, enrich_all, semantic_vector
from .graph import (
    InteractionSets,
    PruningPolicy,
    SemanticNetwork,
    assign_root,
    build_interactions,
    export_graph,
    project,
    prune,
)
from .regression import (
    ComparisonResult,
    EmotionTargets,
    FitResult,
    RegressionReport,
    build_targets,
    compare_models,
    fit_ols,
    run_experiment,
)
from .synth import SynthConfig, SynthLedger, generate
from .text import HashtagIndex, HashtagStats, count_hashtags, load_stopwords, select_trendy, tokenize

__version__ = "0.1.0"
