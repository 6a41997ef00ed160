"""Synthetic Bangla review generator with known gold triplets.

Plants aspect terms from a seed vocabulary and adjacent polarity-marking
opinion terms inside filler text, recording exact raw-text spans. Useful for
end-to-end pipeline checks and demos when no annotated corpus is at hand.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import PLATFORMS, AnnotatedReview, AnnotationRecord, Review, Span, Triplet

ASPECT_CATEGORIES = {
    "ব্যাটারি": "Battery Life",
    "ব্যাটারি লাইফ": "Battery Life",
    "ক্যামেরা": "Camera Quality",
    "ক্যামেরা কোয়ালিটি": "Camera Quality",
    "দাম": "Pricing",
    "ডেলিভারি": "Service",
    "প্যাকেজিং": "Packaging",
    "স্ক্রিন": "Display",
}

POSITIVE_MARKERS = ("ভালো", "চমৎকার", "দারুণ", "অসাধারণ", "সুন্দর")
NEGATIVE_MARKERS = ("খারাপ", "বাজে", "নিম্নমানের", "হতাশাজনক", "দুর্বল")
NEUTRAL_MARKERS = ("মোটামুটি", "সাধারণ", "ঠিকঠাক")

FILLERS = (
    "এই", "ফোনটা", "আমি", "কিনেছি", "একদম", "খুবই", "তবে", "আর",
    "পণ্যটি", "সত্যি", "মনে", "হয়েছে", "অনেক", "দিন", "ব্যবহার", "করে",
)

PUNCT_NOISE = ("!", "!!", "?", "...")

_MARKERS = {
    "positive": POSITIVE_MARKERS,
    "negative": NEGATIVE_MARKERS,
    "neutral": NEUTRAL_MARKERS,
}

# Marker and filler vocabularies must stay disjoint from aspect tokens so the
# generated learning problem is well-posed.
_aspect_tokens = {tok for term in ASPECT_CATEGORIES for tok in term.split()}
assert _aspect_tokens.isdisjoint(FILLERS)
assert _aspect_tokens.isdisjoint(POSITIVE_MARKERS + NEGATIVE_MARKERS + NEUTRAL_MARKERS)
assert set(FILLERS).isdisjoint(POSITIVE_MARKERS + NEGATIVE_MARKERS + NEUTRAL_MARKERS)


@dataclass(frozen=True)
class SynthSettings:
    polarity_weights: tuple[float, float, float] = (0.45, 0.35, 0.20)  # pos, neg, neu
    second_triplet_rate: float = 0.3
    punct_rate: float = 0.3
    double_space_rate: float = 0.15
    multiword_rate: float = 0.25


class _ReviewBuilder:
    """Accumulates tokens and records exact raw character spans."""

    def __init__(self, rng: random.Random, settings: SynthSettings):
        self.rng = rng
        self.settings = settings
        self.parts: list[str] = []
        self.length = 0

    def _sep(self) -> str:
        if self.parts and self.rng.random() < self.settings.double_space_rate:
            return "  "
        return " " if self.parts else ""

    def add(self, token: str) -> tuple[int, int]:
        sep = self._sep()
        self.parts.append(sep + token)
        start = self.length + len(sep)
        self.length = start + len(token)
        return start, self.length

    def add_term(self, term: str) -> tuple[int, int]:
        words = term.split()
        start, end = self.add(words[0])
        for word in words[1:]:
            _, end = self.add(word)
        return start, end

    def text(self) -> str:
        return "".join(self.parts)


def _pick_polarity(rng: random.Random, weights) -> str:
    return rng.choices(["positive", "negative", "neutral"], weights=weights)[0]


def generate_review(
    rng: random.Random, review_id: str, platform: str, settings: SynthSettings
) -> AnnotatedReview:
    builder = _ReviewBuilder(rng, settings)
    for _ in range(rng.randint(1, 3)):
        builder.add(rng.choice(FILLERS))

    triplets = []
    n_triplets = 2 if rng.random() < settings.second_triplet_rate else 1
    used_aspects: set[str] = set()
    for _ in range(n_triplets):
        want_multiword = rng.random() < settings.multiword_rate
        pool = [
            term
            for term in ASPECT_CATEGORIES
            if term not in used_aspects and (" " in term) == want_multiword
        ]
        if not pool:
            pool = sorted(set(ASPECT_CATEGORIES) - used_aspects)
        aspect_term = rng.choice(pool)
        used_aspects.add(aspect_term)
        polarity = _pick_polarity(rng, settings.polarity_weights)
        marker = rng.choice(_MARKERS[polarity])

        a_start, a_end = builder.add_term(aspect_term)
        o_start, o_end = builder.add(marker)
        triplets.append(
            Triplet(
                aspect=Span(a_start, a_end, "aspect"),
                opinion=Span(o_start, o_end, "opinion"),
                polarity=polarity,
                category=ASPECT_CATEGORIES[aspect_term],
            )
        )
        if rng.random() < settings.punct_rate:
            builder.add(rng.choice(PUNCT_NOISE))
        for _ in range(rng.randint(1, 2)):
            builder.add(rng.choice(FILLERS))

    review = Review(
        id=review_id,
        platform=platform,
        raw_text=builder.text(),
        product_category="electronics",
    )
    gold = frozenset(triplets)
    annotations = (
        AnnotationRecord("syn-ann-a", gold),
        AnnotationRecord("syn-ann-b", gold),
    )
    return AnnotatedReview(review, annotations, gold)


def generate_corpus(
    n_reviews: int = 500,
    seed: int = 7,
    settings: SynthSettings | None = None,
) -> list[AnnotatedReview]:
    """Deterministic synthetic corpus; platforms are dealt round-robin."""
    rng = random.Random(seed)
    settings = settings or SynthSettings()
    return [
        generate_review(rng, f"syn-{i:05d}", PLATFORMS[i % len(PLATFORMS)], settings)
        for i in range(n_reviews)
    ]


def aspect_seed_tokens() -> frozenset[str]:
    return frozenset(_aspect_tokens)


def opinion_seed_tokens() -> frozenset[str]:
    return frozenset(POSITIVE_MARKERS + NEGATIVE_MARKERS + NEUTRAL_MARKERS)


def write_seed_lexicons(directory: str | Path) -> tuple[Path, Path]:
    """Write aspect/opinion seed lexicon files; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    aspect_path = directory / "aspect_lexicon.txt"
    opinion_path = directory / "opinion_lexicon.txt"
    aspect_path.write_text("\n".join(sorted(aspect_seed_tokens())) + "\n", encoding="utf-8")
    opinion_path.write_text("\n".join(sorted(opinion_seed_tokens())) + "\n", encoding="utf-8")
    return aspect_path, opinion_path
