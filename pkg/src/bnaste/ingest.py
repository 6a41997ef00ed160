"""Platform export adapters, relevance filtering, and deduplication.

Ingestion is file-based: delimited tabular exports (CSV/TSV) or JSON-lines
record files, mapped to reviews via a user-supplied column mapping.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import PLATFORMS, Review
from .errors import ValidationError

# Codepoint ranges counted as emoji for the emoji-heaviness filter.
_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),  # symbols & pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport & map
    (0x1F900, 0x1FAFF),  # supplemental symbols
    (0x2600, 0x26FF),  # miscellaneous symbols
    (0x2700, 0x27BF),  # dingbats
    (0x1F1E6, 0x1F1FF),  # regional indicators
    (0xFE0F, 0xFE0F),  # emoji variation selector
    (0x2764, 0x2764),
)


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def emoji_ratio(text: str) -> float:
    """Emoji codepoints over emoji codepoints plus word tokens."""
    emoji = sum(1 for ch in text if _is_emoji(ch))
    stripped = "".join(" " if _is_emoji(ch) else ch for ch in text)
    words = len(stripped.split())
    if emoji + words == 0:
        return 0.0
    return emoji / (emoji + words)


@dataclass(frozen=True)
class FilterPolicy:
    max_emoji_ratio: float = 0.5
    min_word_count: int = 1
    blocked_patterns: tuple[str, ...] = ()
    dedupe: bool = True

    def __post_init__(self):
        if not 0.0 <= self.max_emoji_ratio <= 1.0:
            raise ValidationError("max_emoji_ratio must be in [0, 1]")
        if self.min_word_count < 1:
            raise ValidationError("min_word_count must be >= 1")


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    duplicates_removed: int = 0

    def balances(self, input_count: int) -> bool:
        return self.accepted + sum(self.rejected.values()) + self.duplicates_removed == input_count

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": dict(sorted(self.rejected.items())),
            "duplicates_removed": self.duplicates_removed,
        }


def _synth_id(platform: str, row_key: str, occurrence: int) -> str:
    digest = hashlib.blake2b(
        f"{platform}\x1f{row_key}".encode("utf-8"), digest_size=6
    ).hexdigest()
    if occurrence:
        return f"{platform}-{digest}-{occurrence + 1}"
    return f"{platform}-{digest}"


def _iter_rows(path: Path) -> list[dict]:
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError(
            f"{path}: not valid UTF-8 at byte offset {exc.start}"
        ) from None
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from None
        return rows
    delimiter = "\t" if suffix in (".tsv", ".tab") else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    return list(reader)


def read_platform_export(
    source: str | Path,
    platform: str,
    column_map: dict[str, str],
) -> tuple[list[Review], dict[str, int]]:
    """Convert one platform export file into reviews.

    ``column_map`` must name a ``text`` column and may map ``collected_at``
    and ``product_category``. Ids are synthesized deterministically from the
    platform and the row content, so re-reading a file yields identical ids.
    Rows with empty text are dropped and counted in the returned skip map.
    """
    if platform not in PLATFORMS:
        raise ValidationError(f"unknown platform {platform!r}")
    if "text" not in column_map:
        raise ValidationError("column_map must map a 'text' column")
    path = Path(source)
    rows = _iter_rows(path)
    text_col = column_map["text"]

    reviews: list[Review] = []
    skipped: dict[str, int] = {}
    occurrences: dict[str, int] = {}
    for row in rows:
        if text_col not in row:
            raise ValidationError(f"{path}: missing text column {text_col!r}")
        text = row[text_col]
        text = "" if text is None else str(text)
        if not text.strip():
            skipped["empty"] = skipped.get("empty", 0) + 1
            continue
        row_key = json.dumps(
            {k: row.get(v) for k, v in sorted(column_map.items())},
            ensure_ascii=False,
            sort_keys=True,
        )
        occurrence = occurrences.get(row_key, 0)
        occurrences[row_key] = occurrence + 1
        reviews.append(
            Review(
                id=_synth_id(platform, row_key, occurrence),
                platform=platform,
                raw_text=text,
                collected_at=_opt(row, column_map.get("collected_at")),
                product_category=_opt(row, column_map.get("product_category")),
            )
        )
    return reviews, skipped


def _opt(row: dict, column: str | None) -> str | None:
    if column is None:
        return None
    value = row.get(column)
    if value is None or str(value).strip() == "":
        return None
    return str(value)


def _dedupe_key(text: str) -> str:
    collapsed = " ".join(text.split()).casefold()
    return hashlib.blake2b(collapsed.encode("utf-8"), digest_size=8).hexdigest()


def filter_reviews(
    reviews: list[Review], policy: FilterPolicy
) -> tuple[list[Review], IngestReport]:
    """Apply the relevance filters; every rejection carries exactly one reason.

    Rules are checked in fixed order — blocked_pattern, emoji_ratio,
    word_count, duplicate — so reports are auditable and deterministic.
    """
    patterns = [re.compile(p) for p in policy.blocked_patterns]
    report = IngestReport()
    seen: set[str] = set()
    kept: list[Review] = []
    for review in reviews:
        text = review.raw_text
        if any(p.search(text) for p in patterns):
            report.rejected["blocked_pattern"] = report.rejected.get("blocked_pattern", 0) + 1
            continue
        if emoji_ratio(text) > policy.max_emoji_ratio:
            report.rejected["emoji_ratio"] = report.rejected.get("emoji_ratio", 0) + 1
            continue
        stripped = "".join(" " if _is_emoji(ch) else ch for ch in text)
        if len(stripped.split()) < policy.min_word_count:
            report.rejected["word_count"] = report.rejected.get("word_count", 0) + 1
            continue
        if policy.dedupe:
            key = _dedupe_key(text)
            if key in seen:
                report.duplicates_removed += 1
                continue
            seen.add(key)
        kept.append(review)
    report.accepted = len(kept)
    return kept, report
