"""End-to-end pipeline: resource loading, training, extraction, bundles.

Composes the stages in their fixed order: normalize → tokenize → enumerate
candidate spans → score and prune → pair matching on the bipartite graph →
polarity classification → triplets with raw-text offsets.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evalkit
from .config import PipelineConfig, config_from_dict
from .corpus import AnnotatedReview, Review, Span, Triplet
from .errors import ValidationError, log_kv
from .pairmatch import (
    build_pair_graph,
    cosine,
    edge_weight,
    match_pairs,
    token_gap,
)
from .polarity import (
    HashedEmbeddingBackend,
    PolarityModel,
    PrecomputedEmbeddingBackend,
    pair_features_from_vectors,
    read_store,
    train_polarity,
)
from .spanex import (
    CandidateSpan,
    Interval,
    TrainedSpanScorer,
    candidate_intervals,
    load_seed_lexicon,
    prune,
    span_features,
    train_span_scorer,
)
from .textnorm import (
    SpellingLexicon,
    TokenizedText,
    load_spelling_lexicon,
    load_stopwords,
    prepare,
)

BUNDLE_SCHEMA = "bnaste-bundle-v1"


@dataclass
class Resources:
    stopwords: frozenset[str]
    spelling: SpellingLexicon
    aspect_terms: frozenset[str]
    opinion_terms: frozenset[str]


def load_resources(config: PipelineConfig) -> Resources:
    paths = config.paths
    return Resources(
        stopwords=load_stopwords(paths.stopwords) if paths.stopwords else frozenset(),
        spelling=(
            load_spelling_lexicon(paths.spelling_lexicon)
            if paths.spelling_lexicon
            else SpellingLexicon.empty()
        ),
        aspect_terms=(
            load_seed_lexicon(paths.aspect_lexicon) if paths.aspect_lexicon else frozenset()
        ),
        opinion_terms=(
            load_seed_lexicon(paths.opinion_lexicon) if paths.opinion_lexicon else frozenset()
        ),
    )


def make_backend(config: PipelineConfig):
    if config.polarity.backend == "hashed":
        return HashedEmbeddingBackend(dim=config.polarity.dim, seed=config.seed)
    if not config.paths.embedding_store:
        raise ValidationError("precomputed backend requires paths.embedding_store")
    return PrecomputedEmbeddingBackend(read_store(config.paths.embedding_store))


@dataclass
class PipelineModel:
    """Versioned inference bundle: span scorer + polarity model + resources."""

    config: PipelineConfig
    resources: Resources
    span_scorer: TrainedSpanScorer
    polarity_model: PolarityModel
    counts: dict

    @property
    def digest(self) -> str:
        return self.config.digest()

    def backend(self):
        if not hasattr(self, "_backend"):
            self._backend = make_backend(self.config)
        return self._backend


@dataclass(frozen=True)
class ExtractedTriplet:
    triplet: Triplet
    confidence: float
    aspect_score: float
    opinion_score: float
    polarity_confidence: float

    def to_dict(self) -> dict:
        return {
            "aspect": {"start": self.triplet.aspect.start, "end": self.triplet.aspect.end},
            "opinion": {"start": self.triplet.opinion.start, "end": self.triplet.opinion.end},
            "polarity": self.triplet.polarity,
            "confidence": round(self.confidence, 6),
        }


def _prepare(resources: Resources, raw_text: str) -> TokenizedText:
    return prepare(raw_text, resources.spelling, resources.stopwords)


def _pooled(vectors: np.ndarray, interval: Interval) -> np.ndarray:
    pooled = vectors[interval[0] : interval[1] + 1].mean(axis=0)
    if not np.any(pooled):
        # Degenerate all-zero embedding (possible with external stores);
        # substitute a constant vector so cosine stays defined.
        pooled = np.ones_like(pooled)
    return pooled


def align_span_to_tokens(text: TokenizedText, span: Span) -> Interval | None:
    """Smallest token interval whose raw extent covers the gold span."""
    hits = [
        i
        for i in range(text.token_count)
        if _raw_overlap(text.token_raw_span(i), (span.start, span.end))
    ]
    if not hits:
        return None
    return (min(hits), max(hits))


def _raw_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def train_pipeline(corpus: list[AnnotatedReview], config: PipelineConfig) -> PipelineModel:
    """Train span scorer heads and the polarity classifier from gold triplets."""
    resources = load_resources(config)
    backend = make_backend(config)
    policy = config.match_policy()
    max_len = config.spanex.max_span_len

    span_rows: list[np.ndarray] = []
    aspect_labels: list[int] = []
    opinion_labels: list[int] = []
    pair_rows: list[np.ndarray] = []
    pair_labels: list[str] = []
    counts = {
        "reviews": 0,
        "tokens": 0,
        "candidates": 0,
        "gold_triplets": 0,
        "unaligned_gold_spans": 0,
    }

    for record in corpus:
        gold = record.require_gold()
        text = _prepare(resources, record.review.raw_text)
        if text.token_count == 0:
            continue
        vectors = backend.embed(text, record.review.id)
        counts["reviews"] += 1
        counts["tokens"] += text.token_count

        aspect_gold: set[Interval] = set()
        opinion_gold: set[Interval] = set()
        aligned_pairs: list[tuple[Interval, Interval, str]] = []
        for triplet in sorted(gold, key=lambda t: t.key()):
            a = align_span_to_tokens(text, triplet.aspect)
            o = align_span_to_tokens(text, triplet.opinion)
            if a is None or o is None:
                counts["unaligned_gold_spans"] += 1
                continue
            aspect_gold.add(a)
            opinion_gold.add(o)
            aligned_pairs.append((a, o, triplet.polarity))
        counts["gold_triplets"] += len(aligned_pairs)

        for interval in candidate_intervals(text, max_len):
            span_rows.append(
                span_features(
                    vectors, text, interval, resources.aspect_terms,
                    resources.opinion_terms, max_len,
                )
            )
            aspect_labels.append(1 if interval in aspect_gold else 0)
            opinion_labels.append(1 if interval in opinion_gold else 0)
            counts["candidates"] += 1

        for a, o, polarity in aligned_pairs:
            weight = edge_weight(cosine(_pooled(vectors, a), _pooled(vectors, o)),
                                 token_gap(a, o), policy)
            pair_rows.append(pair_features_from_vectors(vectors, a, o, weight))
            pair_labels.append(polarity)

    if not span_rows:
        raise ValidationError("span scorer stage: no training candidates in corpus")
    try:
        scorer = train_span_scorer(
            np.stack(span_rows),
            np.array(aspect_labels),
            np.array(opinion_labels),
            resources.aspect_terms,
            resources.opinion_terms,
            max_len,
            seed=config.seed,
        )
    except ValidationError as exc:
        raise ValidationError(f"span scorer stage: {exc}") from None
    if not pair_rows:
        raise ValidationError("polarity stage: no aligned gold pairs to train on")
    try:
        polarity_model = train_polarity(
            np.stack(pair_rows), pair_labels, config.polarity_train_config()
        )
    except ValidationError as exc:
        raise ValidationError(f"polarity stage: {exc}") from None

    counts["polarity_examples"] = len(pair_labels)
    counts["polarity_train_accuracy"] = round(polarity_model.report.train_accuracy, 4)
    log_kv(
        "train",
        reviews=counts["reviews"],
        candidates=counts["candidates"],
        gold_triplets=counts["gold_triplets"],
        polarity_examples=counts["polarity_examples"],
        train_accuracy=counts["polarity_train_accuracy"],
    )
    return PipelineModel(config, resources, scorer, polarity_model, counts)


def extract_review_triplets(model: PipelineModel, review: Review) -> list[ExtractedTriplet]:
    """Run the trained pipeline over one review; offsets index the raw text."""
    config = model.config
    resources = model.resources
    text = _prepare(resources, review.raw_text)
    if text.token_count == 0:
        return []
    vectors = model.backend().embed(text, review.id)

    intervals = candidate_intervals(text, config.spanex.max_span_len)
    if not intervals:
        return []
    candidates = [
        CandidateSpan(i, j, *model.span_scorer.score_with_vectors(text, (i, j), vectors))
        for i, j in intervals
    ]
    aspects = prune(candidates, "aspect", config.spanex.score_threshold, config.spanex.top_k)
    opinions = prune(candidates, "opinion", config.spanex.score_threshold, config.spanex.top_k)
    if not aspects or not opinions:
        return []

    policy = config.match_policy()
    graph = build_pair_graph(
        aspects,
        opinions,
        [_pooled(vectors, a.interval) for a in aspects],
        [_pooled(vectors, o.interval) for o in opinions],
        policy,
    )
    results = []
    for ai, oi in match_pairs(graph, policy):
        aspect = aspects[ai]
        opinion = opinions[oi]
        features = pair_features_from_vectors(
            vectors, aspect.interval, opinion.interval, float(graph.weights[ai, oi])
        )
        label, dist = model.polarity_model.predict(features)
        a_raw = text.interval_raw_span(aspect.interval)
        o_raw = text.interval_raw_span(opinion.interval)
        triplet = Triplet(
            aspect=Span(a_raw[0], a_raw[1], "aspect"),
            opinion=Span(o_raw[0], o_raw[1], "opinion"),
            polarity=label,
        )
        polarity_confidence = float(dist.max())
        results.append(
            ExtractedTriplet(
                triplet=triplet,
                confidence=min(aspect.aspect_score, opinion.opinion_score) * polarity_confidence,
                aspect_score=aspect.aspect_score,
                opinion_score=opinion.opinion_score,
                polarity_confidence=polarity_confidence,
            )
        )
    results.sort(key=lambda e: (e.triplet.aspect.start, e.triplet.opinion.start))
    return results


def evaluate_pipeline(model: PipelineModel, corpus: list[AnnotatedReview]) -> evalkit.MetricsReport:
    """Score the trained pipeline against an adjudicated corpus."""
    gold = {r.review.id: sorted(r.require_gold(), key=lambda t: t.key()) for r in corpus}
    pred = {
        r.review.id: [e.triplet for e in extract_review_triplets(model, r.review)]
        for r in corpus
    }
    rows = evalkit.score_triplet_map(gold, pred, model.config.eval.span_match)
    return evalkit.MetricsReport(
        rows=tuple(rows), seed=model.config.seed, config_digest=model.digest
    )


# ---------------------------------------------------------------------------
# model bundles
# ---------------------------------------------------------------------------


def save_bundle(model: PipelineModel, bundle_dir: str | Path) -> Path:
    """Write the versioned bundle directory (manifest, resources, weights)."""
    bundle = Path(bundle_dir)
    bundle.mkdir(parents=True, exist_ok=True)
    polarity_file = "polarity.pkl" if model.polarity_model.kind == "gbt" else "polarity.npz"
    manifest = {
        "schema": BUNDLE_SCHEMA,
        "config": model.config.to_dict(),
        "config_digest": model.digest,
        "label_order": list(model.polarity_model.labels),
        "polarity_file": polarity_file,
        "counts": model.counts,
    }
    (bundle / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    resources = {
        "stopwords": sorted(model.resources.stopwords),
        "spelling": dict(sorted(model.resources.spelling.entries.items())),
        "aspect_terms": sorted(model.resources.aspect_terms),
        "opinion_terms": sorted(model.resources.opinion_terms),
    }
    (bundle / "resources.json").write_text(
        json.dumps(resources, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    scorer = model.span_scorer
    np.savez(
        bundle / "span_scorer.npz",
        aspect_weights=scorer.aspect_weights,
        aspect_bias=scorer.aspect_bias,
        opinion_weights=scorer.opinion_weights,
        opinion_bias=scorer.opinion_bias,
        max_span_len=scorer.max_span_len,
    )
    model.polarity_model.save(bundle / polarity_file)
    return bundle


def load_bundle(bundle_dir: str | Path) -> PipelineModel:
    """Load a bundle, verifying schema version and configuration digest."""
    bundle = Path(bundle_dir)
    manifest_path = bundle / "manifest.json"
    if not manifest_path.exists():
        raise ValidationError(f"{bundle}: not a model bundle (missing manifest.json)")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("schema") != BUNDLE_SCHEMA:
        raise ValidationError(f"{bundle}: unsupported bundle schema {manifest.get('schema')!r}")
    config = config_from_dict(manifest["config"])
    if config.digest() != manifest["config_digest"]:
        raise ValidationError(f"{bundle}: config digest mismatch (bundle is corrupt or edited)")

    res_obj = json.loads((bundle / "resources.json").read_text(encoding="utf-8"))
    resources = Resources(
        stopwords=frozenset(res_obj["stopwords"]),
        spelling=SpellingLexicon(dict(res_obj["spelling"])),
        aspect_terms=frozenset(res_obj["aspect_terms"]),
        opinion_terms=frozenset(res_obj["opinion_terms"]),
    )
    data = np.load(bundle / "span_scorer.npz")
    scorer = TrainedSpanScorer(
        aspect_weights=data["aspect_weights"],
        aspect_bias=float(data["aspect_bias"]),
        opinion_weights=data["opinion_weights"],
        opinion_bias=float(data["opinion_bias"]),
        aspect_terms=resources.aspect_terms,
        opinion_terms=resources.opinion_terms,
        max_span_len=int(data["max_span_len"]),
    )
    polarity_model = PolarityModel.load(bundle / manifest["polarity_file"])
    return PipelineModel(config, resources, scorer, polarity_model, manifest.get("counts", {}))


def normalize_text_id(text: str) -> str:
    """Deterministic id for ad-hoc extraction input."""
    import hashlib

    digest = hashlib.blake2b(
        unicodedata.normalize("NFC", text).encode("utf-8"), digest_size=6
    ).hexdigest()
    return f"adhoc-{digest}"
