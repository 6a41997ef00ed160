"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import random

import pytest

from bnaste.corpus import AnnotatedReview, AnnotationRecord, Review, Span, Triplet

# Bangla block letters, vowel signs, virama/nukta, digits, and noise used by
# the randomized alignment tests.
BANGLA_LETTERS = [chr(c) for c in range(0x0995, 0x09B9) if chr(c).isalpha()]
BANGLA_VOWEL_SIGNS = [chr(c) for c in range(0x09BE, 0x09C5)] + ["ে", "ৈ", "ো", "ৌ"]
BANGLA_MODIFIERS = ["্", "়", "ঁ", "ং"]
BANGLA_DIGITS = [chr(c) for c in range(0x09E6, 0x09F0)]
PUNCT = list("!?.,;:()[]\"'-/") + ["।", "॥"]  # incl. danda
EMOJI = ["\U0001F600", "\U0001F44D", "\U0001F4A9", "❤", "\U0001F389"]
WHITESPACE = [" ", "  ", "\t", "\n", "   "]


def bangla_soup(rng: random.Random, min_len: int = 1, max_len: int = 60) -> str:
    """Random Bangla-script text with injected punctuation, emoji, whitespace."""
    pieces = []
    for _ in range(rng.randint(min_len, max_len)):
        kind = rng.random()
        if kind < 0.55:
            word = rng.choice(BANGLA_LETTERS)
            for _ in range(rng.randint(0, 4)):
                sub = rng.random()
                if sub < 0.5:
                    word += rng.choice(BANGLA_LETTERS)
                elif sub < 0.75:
                    word += rng.choice(BANGLA_VOWEL_SIGNS)
                elif sub < 0.9:
                    word += rng.choice(BANGLA_MODIFIERS)
                else:
                    word += rng.choice(BANGLA_DIGITS)
            pieces.append(word)
        elif kind < 0.7:
            pieces.append(rng.choice(PUNCT) * rng.randint(1, 3))
        elif kind < 0.8:
            pieces.append(rng.choice(EMOJI))
        else:
            pieces.append(rng.choice(WHITESPACE))
        if rng.random() < 0.7:
            pieces.append(rng.choice(WHITESPACE))
    return "".join(pieces)


def make_review(rid: str = "r1", text: str = "ভালো ফোন", platform: str = "daraz") -> Review:
    return Review(id=rid, platform=platform, raw_text=text)


def make_triplet(a=(0, 4), o=(5, 8), polarity="positive", category=None) -> Triplet:
    return Triplet(
        aspect=Span(a[0], a[1], "aspect"),
        opinion=Span(o[0], o[1], "opinion"),
        polarity=polarity,
        category=category,
    )


def make_annotated(
    rid: str = "r1",
    text: str = "ভালো ফোন",
    triplets: tuple = (),
    annotators: tuple[str, ...] = ("a", "b"),
    platform: str = "daraz",
    gold: bool = True,
) -> AnnotatedReview:
    """Review with identical annotation records so adjudication is consistent."""
    tset = frozenset(triplets)
    records = tuple(AnnotationRecord(name, tset) for name in annotators)
    return AnnotatedReview(make_review(rid, text, platform), records, tset if gold else None)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240811)
