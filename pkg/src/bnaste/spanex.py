"""Candidate span enumeration, scoring, and pruning.

Spans are inclusive token-index intervals [i, j] over the full token
sequence. Candidates may contain stopword tokens but never start or end on
one. Scoring backends are pluggable; the default is a logistic model over
embedding features plus aspect/opinion seed lexicons.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from sklearn.linear_model import LogisticRegression

from .errors import ScorerError, ValidationError
from .textnorm import TokenizedText

Interval = tuple[int, int]

DEFAULT_MAX_SPAN_LEN = 4
DEFAULT_SCORE_THRESHOLD = 0.5
DEFAULT_TOP_K = 10


@dataclass(frozen=True)
class CandidateSpan:
    start: int  # first token index (inclusive)
    end: int  # last token index (inclusive)
    aspect_score: float
    opinion_score: float

    @property
    def interval(self) -> Interval:
        return (self.start, self.end)

    def overlaps(self, other: "CandidateSpan") -> bool:
        return self.start <= other.end and other.start <= self.end

    def width(self) -> int:
        return self.end - self.start + 1


class SpanScorer(Protocol):
    """Deterministic span scoring contract: (aspect_score, opinion_score) in [0,1]²."""

    def score(self, text: TokenizedText, interval: Interval) -> tuple[float, float]: ...


def enumerate_spans(token_count: int, max_span_len: int) -> list[Interval]:
    """All intervals [i, j] with width <= max_span_len, in lexicographic order.

    Count identity: sum over widths w of (n - w + 1).
    """
    if token_count < 0 or max_span_len < 1:
        raise ValidationError("token_count must be >= 0 and max_span_len >= 1")
    spans = []
    for i in range(token_count):
        for j in range(i, min(i + max_span_len, token_count)):
            spans.append((i, j))
    return spans


def candidate_intervals(text: TokenizedText, max_span_len: int) -> list[Interval]:
    """Enumerated intervals that do not start or end on a stopword token."""
    return [
        (i, j)
        for i, j in enumerate_spans(text.token_count, max_span_len)
        if not text.tokens[i].is_stopword and not text.tokens[j].is_stopword
    ]


def score_spans(
    text: TokenizedText, candidates: Sequence[Interval], scorer: SpanScorer
) -> list[CandidateSpan]:
    """Score every candidate interval, preserving input order."""
    out = []
    for interval in candidates:
        i, j = interval
        if not (0 <= i <= j < text.token_count):
            raise ValidationError(f"interval {interval} invalid for {text.token_count} tokens")
        try:
            aspect, opinion = scorer.score(text, interval)
        except Exception as exc:
            raise ScorerError(str(exc), interval=interval) from exc
        out.append(CandidateSpan(i, j, float(aspect), float(opinion)))
    return out


def prune(
    candidates: Iterable[CandidateSpan],
    role: str,
    threshold: float = DEFAULT_SCORE_THRESHOLD,
    top_k: int = DEFAULT_TOP_K,
) -> list[CandidateSpan]:
    """Threshold, non-maximum suppression, and top-k cap for one role.

    Survivors have role score >= threshold; among overlapping survivors the
    higher score wins (ties: earlier start, then shorter span). The result
    is capped at top_k by score and returned sorted by start.
    """
    if role not in ("aspect", "opinion"):
        raise ValidationError(f"unknown role {role!r}")
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError("threshold must be in [0, 1]")
    score_of = (lambda c: c.aspect_score) if role == "aspect" else (lambda c: c.opinion_score)
    eligible = [c for c in candidates if score_of(c) >= threshold]
    # Canonical priority order makes the result invariant to input order.
    eligible.sort(key=lambda c: (-score_of(c), c.start, c.width(), c.end))
    kept: list[CandidateSpan] = []
    for cand in eligible:
        if len(kept) >= top_k:
            break
        if not any(cand.overlaps(k) for k in kept):
            kept.append(cand)
    kept.sort(key=lambda c: (c.start, c.end))
    return kept


# ---------------------------------------------------------------------------
# scorers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantScorer:
    aspect: float = 0.5
    opinion: float = 0.5

    def score(self, text: TokenizedText, interval: Interval) -> tuple[float, float]:
        return self.aspect, self.opinion


@dataclass(frozen=True)
class LexiconScorer:
    """Seed-lexicon baseline: 1.0 when the span's head (last) token is listed."""

    aspect_terms: frozenset[str]
    opinion_terms: frozenset[str]

    def score(self, text: TokenizedText, interval: Interval) -> tuple[float, float]:
        head = text.token_text(interval[1])
        return (
            1.0 if head in self.aspect_terms else 0.0,
            1.0 if head in self.opinion_terms else 0.0,
        )


def load_seed_lexicon(path: str | Path) -> frozenset[str]:
    """One term per line, UTF-8."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        term = line.strip()
        if term and not term.startswith("#"):
            terms.add(term)
    return frozenset(terms)


def span_features(
    token_vectors: np.ndarray,
    text: TokenizedText,
    interval: Interval,
    aspect_terms: frozenset[str],
    opinion_terms: frozenset[str],
    max_span_len: int,
) -> np.ndarray:
    """Feature layout: [mean, first, last token embedding; lexicon flags; width]."""
    i, j = interval
    block = token_vectors[i : j + 1]
    head = text.token_text(j)
    extras = np.array(
        [
            1.0 if head in aspect_terms else 0.0,
            1.0 if head in opinion_terms else 0.0,
            (j - i + 1) / max_span_len,
        ]
    )
    return np.concatenate([block.mean(axis=0), block[0], block[-1], extras])


@dataclass
class TrainedSpanScorer:
    """Two logistic heads (aspect / opinion) over span embedding features.

    Inference uses the stored weights directly, so a saved scorer never
    needs the training library to run.
    """

    aspect_weights: np.ndarray
    aspect_bias: float
    opinion_weights: np.ndarray
    opinion_bias: float
    aspect_terms: frozenset[str]
    opinion_terms: frozenset[str]
    max_span_len: int

    def _features(self, text: TokenizedText, interval: Interval, token_vectors: np.ndarray):
        return span_features(
            token_vectors, text, interval, self.aspect_terms, self.opinion_terms, self.max_span_len
        )

    def score_with_vectors(
        self, text: TokenizedText, interval: Interval, token_vectors: np.ndarray
    ) -> tuple[float, float]:
        x = self._features(text, interval, token_vectors)
        a = _sigmoid(float(x @ self.aspect_weights) + self.aspect_bias)
        o = _sigmoid(float(x @ self.opinion_weights) + self.opinion_bias)
        return a, o


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


def train_span_scorer(
    features: np.ndarray,
    aspect_labels: np.ndarray,
    opinion_labels: np.ndarray,
    aspect_terms: frozenset[str],
    opinion_terms: frozenset[str],
    max_span_len: int,
    seed: int = 42,
) -> TrainedSpanScorer:
    """Fit the two logistic heads on labeled candidate spans."""
    if len(set(aspect_labels.tolist())) < 2 or len(set(opinion_labels.tolist())) < 2:
        raise ValidationError("span scorer training needs positive and negative examples for both roles")

    def fit(labels: np.ndarray) -> tuple[np.ndarray, float]:
        clf = LogisticRegression(
            max_iter=2000, class_weight="balanced", random_state=seed, C=10.0
        )
        clf.fit(features, labels)
        return clf.coef_[0].copy(), float(clf.intercept_[0])

    aw, ab = fit(aspect_labels)
    ow, ob = fit(opinion_labels)
    return TrainedSpanScorer(aw, ab, ow, ob, aspect_terms, opinion_terms, max_span_len)
