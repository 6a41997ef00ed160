"""Annotated-corpus data model, on-disk format, adjudication, and statistics.

Corpus files are UTF-8 JSON lines, one review per line. Spans are character
offsets into the raw review text, which survive any later retokenization.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import IO, Iterable, Union

from .errors import CorpusFormatError, ValidationError

PLATFORMS = ("daraz", "facebook", "rokomari", "shajgoj", "other")
POLARITIES = ("positive", "negative", "neutral")
ROLES = ("aspect", "opinion")


@dataclass(frozen=True)
class Span:
    """Character-offset span [start, end) with its role in a triplet."""

    start: int
    end: int
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"unknown span role {self.role!r}")
        if self.start < 0 or self.end <= self.start:
            raise ValidationError(f"invalid span offsets ({self.start}, {self.end})")

    def check_against(self, text: str, review_id: str) -> None:
        if self.end > len(text):
            raise ValidationError(
                f"review {review_id!r}: span ({self.start}, {self.end}) exceeds text length {len(text)}"
            )
        if not text[self.start : self.end].strip():
            raise ValidationError(
                f"review {review_id!r}: span ({self.start}, {self.end}) covers only whitespace"
            )


@dataclass(frozen=True)
class Triplet:
    """(aspect span, opinion span, polarity) — the pipeline's output unit."""

    aspect: Span
    opinion: Span
    polarity: str
    category: str | None = None

    def __post_init__(self):
        if self.polarity not in POLARITIES:
            raise ValidationError(f"unknown polarity {self.polarity!r}")
        if self.aspect.role != "aspect" or self.opinion.role != "opinion":
            raise ValidationError("triplet spans carry the wrong roles")

    def key(self) -> tuple[int, int, int, int, str]:
        """Identity used for voting and exact-match evaluation (category excluded)."""
        return (
            self.aspect.start,
            self.aspect.end,
            self.opinion.start,
            self.opinion.end,
            self.polarity,
        )


@dataclass(frozen=True)
class Review:
    id: str
    platform: str
    raw_text: str
    collected_at: str | None = None
    product_category: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("review id must be non-empty")
        if self.platform not in PLATFORMS:
            raise ValidationError(f"review {self.id!r}: unknown platform {self.platform!r}")
        if not unicodedata.normalize("NFC", self.raw_text).strip():
            raise ValidationError(f"review {self.id!r}: raw_text is empty")


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    triplets: frozenset[Triplet]

    def __post_init__(self):
        if not self.annotator_id:
            raise ValidationError("annotator_id must be non-empty")


@dataclass(frozen=True)
class AnnotatedReview:
    review: Review
    annotations: tuple[AnnotationRecord, ...] = ()
    gold: frozenset[Triplet] | None = None

    def require_gold(self) -> frozenset[Triplet]:
        if self.gold is None:
            raise ValidationError(f"review {self.review.id!r} is not adjudicated")
        return self.gold


@dataclass(frozen=True)
class PolarityCounts:
    total: int
    positive: int
    negative: int
    neutral: int


@dataclass(frozen=True)
class CorpusStats:
    total_reviews: int
    per_platform: dict[str, int]
    per_category: dict[str, PolarityCounts]


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

Source = Union[str, Path, bytes, IO[bytes]]


def _span_from_dict(obj, role: str, review_id: str, line: int) -> Span:
    try:
        return Span(int(obj["start"]), int(obj["end"]), role)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(
            f"review {review_id!r}: bad {role} span field: {exc}", line=line
        ) from None


def _triplet_from_dict(obj, review_id: str, line: int) -> Triplet:
    for key in ("aspect", "opinion", "polarity"):
        if key not in obj:
            raise CorpusFormatError(f"review {review_id!r}: triplet missing {key!r}", line=line)
    try:
        return Triplet(
            aspect=_span_from_dict(obj["aspect"], "aspect", review_id, line),
            opinion=_span_from_dict(obj["opinion"], "opinion", review_id, line),
            polarity=obj["polarity"],
            category=obj.get("category"),
        )
    except ValidationError as exc:
        raise CorpusFormatError(str(exc), line=line) from None


def _read_lines(source: Source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return text.splitlines()


def parse_corpus(source: Source) -> list[AnnotatedReview]:
    """Parse a line-delimited corpus file, validating every record.

    Raises :class:`CorpusFormatError` naming the line for malformed records,
    out-of-bounds spans, or duplicate review ids. Ordering is preserved.
    """
    records: list[AnnotatedReview] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(_read_lines(source), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
        for key in ("id", "platform", "text"):
            if key not in obj:
                raise CorpusFormatError(f"record missing field {key!r}", line=lineno)
        try:
            review = Review(
                id=obj["id"],
                platform=obj["platform"],
                raw_text=obj["text"],
                collected_at=obj.get("collected_at"),
                product_category=obj.get("product_category"),
            )
        except ValidationError as exc:
            raise CorpusFormatError(str(exc), line=lineno) from None
        if review.id in seen_ids:
            raise CorpusFormatError(f"duplicate review id {review.id!r}", line=lineno)
        seen_ids.add(review.id)

        annotations: list[AnnotationRecord] = []
        for ann in obj.get("annotations", []):
            if "annotator" not in ann:
                raise CorpusFormatError(
                    f"review {review.id!r}: annotation missing 'annotator'", line=lineno
                )
            triplets = [
                _triplet_from_dict(t, review.id, lineno) for t in ann.get("triplets", [])
            ]
            if len(triplets) != len(set(triplets)):
                raise CorpusFormatError(
                    f"review {review.id!r}: duplicate triplets in annotation "
                    f"{ann['annotator']!r}",
                    line=lineno,
                )
            try:
                annotations.append(
                    AnnotationRecord(ann["annotator"], frozenset(triplets))
                )
            except ValidationError as exc:
                raise CorpusFormatError(str(exc), line=lineno) from None

        gold = None
        if "gold" in obj and obj["gold"] is not None:
            gold = frozenset(
                _triplet_from_dict(t, review.id, lineno) for t in obj["gold"]
            )

        for triplet in set().union(*(a.triplets for a in annotations), gold or frozenset()):
            try:
                triplet.aspect.check_against(review.raw_text, review.id)
                triplet.opinion.check_against(review.raw_text, review.id)
            except ValidationError as exc:
                raise CorpusFormatError(str(exc), line=lineno) from None

        records.append(AnnotatedReview(review, tuple(annotations), gold))
    return records


def _span_to_dict(span: Span) -> dict:
    return {"start": span.start, "end": span.end}


def _triplet_to_dict(triplet: Triplet) -> dict:
    obj = {
        "aspect": _span_to_dict(triplet.aspect),
        "opinion": _span_to_dict(triplet.opinion),
        "polarity": triplet.polarity,
    }
    if triplet.category is not None:
        obj["category"] = triplet.category
    return obj


def _sorted_triplets(triplets: Iterable[Triplet]) -> list[Triplet]:
    return sorted(triplets, key=lambda t: t.key())


def serialize_corpus(corpus: Iterable[AnnotatedReview]) -> str:
    """Render a corpus in the line-delimited file format (deterministic)."""
    lines = []
    for record in corpus:
        obj: dict = {
            "id": record.review.id,
            "platform": record.review.platform,
            "text": record.review.raw_text,
        }
        if record.review.collected_at is not None:
            obj["collected_at"] = record.review.collected_at
        if record.review.product_category is not None:
            obj["product_category"] = record.review.product_category
        obj["annotations"] = [
            {
                "annotator": ann.annotator_id,
                "triplets": [_triplet_to_dict(t) for t in _sorted_triplets(ann.triplets)],
            }
            for ann in record.annotations
        ]
        if record.gold is not None:
            obj["gold"] = [_triplet_to_dict(t) for t in _sorted_triplets(record.gold)]
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def write_corpus(corpus: Iterable[AnnotatedReview], path: str | Path) -> None:
    Path(path).write_text(serialize_corpus(corpus), encoding="utf-8")


# ---------------------------------------------------------------------------
# adjudication and agreement
# ---------------------------------------------------------------------------


def _pick_category(candidates: list[str | None]) -> str | None:
    named = [c for c in candidates if c is not None]
    if not named:
        return None
    counts = Counter(named)
    best = max(counts.values())
    return min(c for c, n in counts.items() if n == best)


def adjudicate(
    annotations: Iterable[AnnotationRecord],
) -> tuple[frozenset[Triplet], frozenset[Triplet]]:
    """Majority-vote adjudication over annotation records.

    A triplet (identified by exact span offsets plus polarity) goes to gold
    iff it appears in a strict majority of records; anything seen at least
    once but short of a majority lands in conflicts. Even splits are
    conflicts. Category labels are merged by most-common-then-lexicographic.
    """
    records = list(annotations)
    if len(records) < 2:
        raise ValidationError("adjudication requires at least 2 annotation records")
    votes: Counter = Counter()
    categories: dict[tuple, list[str | None]] = {}
    for record in records:
        for key in {t.key() for t in record.triplets}:
            votes[key] += 1
        for t in record.triplets:
            categories.setdefault(t.key(), []).append(t.category)

    def rebuild(key: tuple) -> Triplet:
        a_start, a_end, o_start, o_end, polarity = key
        return Triplet(
            aspect=Span(a_start, a_end, "aspect"),
            opinion=Span(o_start, o_end, "opinion"),
            polarity=polarity,
            category=_pick_category(categories[key]),
        )

    majority = len(records) / 2
    gold = frozenset(rebuild(k) for k, n in votes.items() if n > majority)
    conflicts = frozenset(rebuild(k) for k, n in votes.items() if 0 < n <= majority)
    return gold, conflicts


def agreement(annotations: Iterable[AnnotationRecord]) -> float:
    """Mean pairwise exact-match F1 between annotator triplet sets, in [0, 1]."""
    records = list(annotations)
    if len(records) < 2:
        raise ValidationError("agreement requires at least 2 annotation records")
    scores = []
    for a, b in combinations(records, 2):
        keys_a = {t.key() for t in a.triplets}
        keys_b = {t.key() for t in b.triplets}
        if not keys_a and not keys_b:
            scores.append(1.0)
            continue
        tp = len(keys_a & keys_b)
        p = tp / len(keys_b) if keys_b else 0.0
        r = tp / len(keys_a) if keys_a else 0.0
        scores.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
    return sum(scores) / len(scores)


def adjudicate_corpus(corpus: Iterable[AnnotatedReview]) -> list[AnnotatedReview]:
    """Fill the gold set of every record from its annotations."""
    out = []
    for record in corpus:
        gold, _ = adjudicate(record.annotations)
        out.append(AnnotatedReview(record.review, record.annotations, gold))
    return out


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

UNCATEGORIZED = "(uncategorized)"


def corpus_stats(corpus: Iterable[AnnotatedReview]) -> CorpusStats:
    """Per-platform review counts and per-category polarity counts over gold."""
    records = list(corpus)
    missing = [r.review.id for r in records if r.gold is None]
    if missing:
        raise ValidationError(f"unadjudicated records: {', '.join(sorted(missing))}")
    per_platform: Counter = Counter()
    per_category: dict[str, Counter] = {}
    for record in records:
        per_platform[record.review.platform] += 1
        for triplet in record.gold or ():
            cat = triplet.category or UNCATEGORIZED
            per_category.setdefault(cat, Counter())[triplet.polarity] += 1
    categories = {
        cat: PolarityCounts(
            total=sum(c.values()),
            positive=c.get("positive", 0),
            negative=c.get("negative", 0),
            neutral=c.get("neutral", 0),
        )
        for cat, c in per_category.items()
    }
    return CorpusStats(
        total_reviews=len(records),
        per_platform=dict(per_platform),
        per_category=categories,
    )


def load_manifest(path: str | Path) -> dict:
    """Read a sidecar manifest with expected per-platform counts."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "per_platform" not in obj:
        raise ValidationError(f"{path}: manifest missing 'per_platform'")
    return obj


def check_manifest(stats: CorpusStats, manifest: dict) -> list[str]:
    """Compare computed stats against a fixture manifest; returns mismatches."""
    problems = []
    expected = manifest["per_platform"]
    for platform in sorted(set(expected) | set(stats.per_platform)):
        want = expected.get(platform, 0)
        got = stats.per_platform.get(platform, 0)
        if want != got:
            problems.append(f"platform {platform!r}: manifest {want}, corpus {got}")
    total = manifest.get("total")
    if total is not None and total != stats.total_reviews:
        problems.append(f"total: manifest {total}, corpus {stats.total_reviews}")
    return problems


def validate_corpus(corpus: Iterable[AnnotatedReview]) -> list[str]:
    """Deep invariant check used by the `validate` command.

    Structural invariants are enforced at parse time; this adds the
    adjudication consistency check (gold must equal the majority vote when
    two or more annotation records are present).
    """
    problems = []
    for record in corpus:
        if record.gold is not None and len(record.annotations) >= 2:
            expected, _ = adjudicate(record.annotations)
            if {t.key() for t in expected} != {t.key() for t in record.gold}:
                problems.append(
                    f"review {record.review.id!r}: gold does not match majority vote"
                )
    return problems
