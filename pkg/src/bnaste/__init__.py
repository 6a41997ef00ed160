"""Aspect-opinion-sentiment triplet extraction for Bangla product reviews.

The pipeline: corpus ingestion and validation, offset-preserving text
normalization, candidate span enumeration and scoring, similarity-weighted
bipartite aspect-opinion matching, ensemble polarity classification, and a
metric suite with stratified cross-validation.
"""

from .config import PipelineConfig, load_config
from .corpus import (
    AnnotatedReview,
    AnnotationRecord,
    CorpusStats,
    Review,
    Span,
    Triplet,
    adjudicate,
    agreement,
    corpus_stats,
    parse_corpus,
    serialize_corpus,
    write_corpus,
)
from .errors import AsteError, CorpusFormatError, ScorerError, ValidationError
from .evalkit import (
    MetricsReport,
    MetricsRow,
    cross_validate,
    f1,
    kfold_split,
    prf,
    render_report,
    score_triplets,
)
from .ingest import FilterPolicy, IngestReport, filter_reviews, read_platform_export
from .pairmatch import MatchPolicy, PairGraph, build_pair_graph, cosine, match_pairs
from .pipeline import (
    ExtractedTriplet,
    PipelineModel,
    extract_review_triplets,
    evaluate_pipeline,
    load_bundle,
    save_bundle,
    train_pipeline,
)
from .polarity import (
    EmbeddingStore,
    HashedEmbeddingBackend,
    PolarityModel,
    PrecomputedEmbeddingBackend,
    featurize_pair,
    predict_polarity,
    read_store,
    train_polarity,
    write_store,
)
from .spanex import CandidateSpan, enumerate_spans, prune, score_spans
from .textnorm import (
    OffsetMap,
    SpellingLexicon,
    TokenizedText,
    grapheme_clusters,
    map_span,
    normalize,
    tokenize,
)

__version__ = "0.1.0"
