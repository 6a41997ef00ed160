"""Offset-preserving normalization and tokenization for Bangla-script text.

The pipeline's central alignment guarantee lives here: every position of the
normalized string remembers which raw-text region produced it, so spans found
on normalized text can always be mapped back to the original review. Mapped
raw substrings re-normalize to exactly the normalized span text.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import ValidationError

_ZWNJ = "‌"
_ZWJ = "‍"
_VIRAMA_CCC = 9


def _is_extend(ch: str) -> bool:
    if unicodedata.category(ch) in ("Mn", "Mc", "Me"):
        return True
    cp = ord(ch)
    if 0xFE00 <= cp <= 0xFE0F:  # variation selectors
        return True
    return ch in (_ZWNJ, _ZWJ)


def _is_regional_indicator(ch: str) -> bool:
    return 0x1F1E6 <= ord(ch) <= 0x1F1FF


def grapheme_clusters(text: str) -> list[tuple[int, int]]:
    """Segment ``text`` into grapheme clusters, returned as (start, end) offsets.

    Covers the cluster rules that matter for Bangla and e-commerce review
    noise: combining marks, ZWJ/ZWNJ conjunct control, virama-joined
    consonant clusters, variation selectors, emoji ZWJ sequences, regional
    indicator pairs, and CRLF. Prepend-class characters are not handled.
    """
    clusters: list[tuple[int, int]] = []
    i, n = 0, len(text)
    while i < n:
        j = i + 1
        if text[i] == "\r" and j < n and text[j] == "\n":
            j += 1
        else:
            while j < n:
                ch = text[j]
                prev = text[j - 1]
                if _is_extend(ch):
                    j += 1
                elif prev == _ZWJ and unicodedata.category(ch) == "So":
                    j += 1  # emoji ZWJ sequences
                elif unicodedata.combining(prev) == _VIRAMA_CCC and unicodedata.category(ch) == "Lo":
                    j += 1
                elif _is_regional_indicator(prev) and _is_regional_indicator(ch) and j - i == 1:
                    j += 1
                else:
                    break
        clusters.append((i, j))
        i = j
    return clusters


@dataclass(frozen=True)
class SpellingLexicon:
    """Whole-token spelling rewrites: variant form -> canonical form."""

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for variant, canonical in self.entries.items():
            if not variant or not canonical:
                raise ValidationError("lexicon entries must be non-empty")
            for word in canonical.split():
                if word in self.entries:
                    raise ValidationError(
                        f"lexicon canonical {canonical!r} contains variant key {word!r} (rewrite chain)"
                    )

    @classmethod
    def empty(cls) -> "SpellingLexicon":
        return cls({})


def load_spelling_lexicon(path: str | Path) -> SpellingLexicon:
    """Load a tab-separated variant→canonical lexicon (UTF-8, one pair per line)."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path}: line {lineno}: expected 'variant<TAB>canonical'")
        variant = unicodedata.normalize("NFC", parts[0].strip())
        canonical = unicodedata.normalize("NFC", parts[1].strip())
        entries[variant] = canonical
    return SpellingLexicon(entries)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load a stopword list (UTF-8, one token per line)."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = unicodedata.normalize("NFC", line.strip())
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)


@dataclass(frozen=True)
class OffsetMap:
    """Alignment from normalized-text positions back to raw-text positions.

    ``starts[i]``/``ends[i]`` bound the raw region that produced normalized
    character ``i``. Raw text stripped at the string boundaries is folded
    into the first and last characters, so the map always covers the whole
    raw string and ``pairs`` starts at (0, 0).
    """

    starts: tuple[int, ...]
    ends: tuple[int, ...]
    raw_length: int

    @classmethod
    def identity(cls, length: int) -> "OffsetMap":
        return cls(tuple(range(length)), tuple(i + 1 for i in range(length)), length)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Anchor pairs (normalized_offset, raw_offset), strictly increasing
        in both coordinates, recorded wherever the alignment shift changes."""
        if not self.starts:
            return ((0, 0),)
        anchors = [(0, self.starts[0])]
        last_r = self.starts[0]
        last_shift = self.starts[0]
        for i in range(1, len(self.starts)):
            shift = self.starts[i] - i
            if shift != last_shift and self.starts[i] > last_r:
                anchors.append((i, self.starts[i]))
                last_r = self.starts[i]
                last_shift = shift
        if self.ends[-1] > last_r:
            anchors.append((len(self.starts), self.ends[-1]))
        return tuple(anchors)


def map_span(offset_map: OffsetMap, span: tuple[int, int]) -> tuple[int, int]:
    """Translate a span over normalized text into raw-text offsets.

    The returned raw substring re-normalizes to the normalized span text
    (junk absorbed at the edges is removed again by normalization).
    """
    start, end = span
    if not (0 <= start < end <= len(offset_map)):
        raise ValidationError(
            f"span ({start}, {end}) out of bounds for normalized length {len(offset_map)}"
        )
    return offset_map.starts[start], offset_map.ends[end - 1]


class Token(NamedTuple):
    start: int
    end: int
    is_stopword: bool


@dataclass(frozen=True)
class TokenizedText:
    """Normalized text with token offsets and the alignment back to raw text."""

    normalized: str
    tokens: tuple[Token, ...]
    offset_map: OffsetMap

    def token_text(self, index: int) -> str:
        tok = self.tokens[index]
        return self.normalized[tok.start : tok.end]

    def token_raw_span(self, index: int) -> tuple[int, int]:
        tok = self.tokens[index]
        return map_span(self.offset_map, (tok.start, tok.end))

    def interval_text(self, interval: tuple[int, int]) -> str:
        i, j = interval
        return self.normalized[self.tokens[i].start : self.tokens[j].end]

    def interval_span(self, interval: tuple[int, int]) -> tuple[int, int]:
        i, j = interval
        return self.tokens[i].start, self.tokens[j].end

    def interval_raw_span(self, interval: tuple[int, int]) -> tuple[int, int]:
        return map_span(self.offset_map, self.interval_span(interval))

    @property
    def token_count(self) -> int:
        return len(self.tokens)


def _cluster_kind(piece: str) -> str:
    """Classify an NFC'd grapheme cluster by its base character."""
    base = piece[0]
    if base.isspace():
        return "gap"
    cat = unicodedata.category(base)
    if cat[0] in ("P", "S") or cat in ("Cc", "Cf", "Cn", "Co", "Cs"):
        return "gap"
    return "word"


def normalize(
    raw: str, lexicon: SpellingLexicon | None = None
) -> tuple[str, OffsetMap]:
    """Canonical-compose, strip punctuation/symbols, collapse whitespace,
    and apply whole-token spelling rewrites, tracking offsets throughout.

    Punctuation, symbol, and control clusters become token separators;
    whitespace runs collapse to single spaces; leading/trailing separator
    runs are dropped. Total function: never raises on any Unicode input.
    """
    lexicon = lexicon or SpellingLexicon.empty()

    # Tokens assembled as (chars, starts, ends); gaps tracked for separators.
    tokens: list[tuple[list[str], list[int], list[int]]] = []
    gap_before: list[int] = []  # raw start of the gap run preceding each token
    current: tuple[list[str], list[int], list[int]] | None = None
    pending_gap: int | None = None

    for cs, ce in grapheme_clusters(raw):
        piece = unicodedata.normalize("NFC", raw[cs:ce])
        if not piece or _cluster_kind(piece) == "gap":
            if current is not None:
                tokens.append(current)
                current = None
            if pending_gap is None:
                pending_gap = cs
            continue
        if current is None:
            current = ([], [], [])
            gap_before.append(pending_gap if pending_gap is not None else cs)
            pending_gap = None
        chars, starts, ends = current
        if len(piece) == ce - cs:
            for k, ch in enumerate(piece):
                chars.append(ch)
                starts.append(cs + k)
                ends.append(cs + k + 1)
        else:
            # Composition changed the length; attribute the whole cluster.
            for ch in piece:
                chars.append(ch)
                starts.append(cs)
                ends.append(ce)
    if current is not None:
        tokens.append(current)

    out_chars: list[str] = []
    out_starts: list[int] = []
    out_ends: list[int] = []
    for idx, (chars, starts, ends) in enumerate(tokens):
        if idx > 0:
            sep_raw = gap_before[idx]
            out_chars.append(" ")
            out_starts.append(sep_raw)
            out_ends.append(sep_raw + 1)
        text = "".join(chars)
        canonical = lexicon.entries.get(text)
        if canonical is not None and canonical != text:
            tok_lo, tok_hi = starts[0], ends[-1]
            for ch in canonical:
                out_chars.append(ch)
                out_starts.append(tok_lo)
                out_ends.append(tok_hi)
        else:
            out_chars.extend(chars)
            out_starts.extend(starts)
            out_ends.extend(ends)

    if out_chars:
        out_starts[0] = 0
        out_ends[-1] = len(raw)
    normalized = "".join(out_chars)
    return normalized, OffsetMap(tuple(out_starts), tuple(out_ends), len(raw))


def tokenize(
    normalized: str,
    stopwords: Iterable[str] = (),
    offset_map: OffsetMap | None = None,
) -> TokenizedText:
    """Split normalized text on whitespace and flag (never delete) stopwords.

    Expects input produced by :func:`normalize`; an identity offset map is
    assumed when none is given (text already aligned with itself).
    """
    if offset_map is None:
        offset_map = OffsetMap.identity(len(normalized))
    stopset = stopwords if isinstance(stopwords, (set, frozenset)) else frozenset(stopwords)
    tokens: list[Token] = []
    i, n = 0, len(normalized)
    while i < n:
        if normalized[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not normalized[j].isspace():
            j += 1
        tokens.append(Token(i, j, normalized[i:j] in stopset))
        i = j
    return TokenizedText(normalized, tuple(tokens), offset_map)


def prepare(
    raw: str,
    lexicon: SpellingLexicon | None = None,
    stopwords: Iterable[str] = (),
) -> TokenizedText:
    """normalize → tokenize → stopword-flag, in the pipeline's fixed order."""
    normalized, offset_map = normalize(raw, lexicon)
    return tokenize(normalized, stopwords, offset_map)
