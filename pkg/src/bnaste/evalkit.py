"""Metric suite, triplet scoring, stratified k-fold cross-validation, and reports.

All span comparisons use exact raw-text character offsets by default. The
report layout fixes four rows: aspect term extraction, opinion term
extraction, sentiment classification (over span-matched pairs), and overall
triplet extraction.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import POLARITIES, AnnotatedReview, Triplet
from .errors import ValidationError

ROW_NAMES = ("aspect_term", "opinion_term", "sentiment_classification", "overall_triplet")
ROW_TITLES = {
    "aspect_term": "Aspect Term Extraction",
    "opinion_term": "Opinion Term Extraction",
    "sentiment_classification": "Sentiment Classification",
    "overall_triplet": "Overall Triplet Extraction",
}
REPORT_SCHEMA = "bnaste-report-v1"


def f1(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValidationError("precision and recall must be in [0, 1]")
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def prf(gold: Iterable, pred: Iterable, matcher=None) -> PRF:
    """Precision/recall/F1 between two finite item sets.

    Exact equality by default; a binary ``matcher(gold_item, pred_item)``
    switches to greedy one-to-one matching. Empty vs empty scores 1.0 by
    convention; empty vs non-empty scores 0.0.
    """
    gold_set = set(gold)
    pred_set = set(pred)
    if not gold_set and not pred_set:
        return PRF(1.0, 1.0, 1.0, 0, 0, 0)
    if matcher is None:
        tp = len(gold_set & pred_set)
    else:
        unmatched = set(gold_set)
        tp = 0
        for p_item in sorted(pred_set):
            hit = next((g for g in sorted(unmatched) if matcher(g, p_item)), None)
            if hit is not None:
                unmatched.discard(hit)
                tp += 1
    fp = len(pred_set) - tp
    fn = len(gold_set) - tp
    p = tp / len(pred_set) if pred_set else 0.0
    r = tp / len(gold_set) if gold_set else 0.0
    return PRF(p, r, f1(p, r), tp, fp, fn)


@dataclass(frozen=True)
class MetricsRow:
    name: str
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    accuracy: float | None = None
    support: int | None = None

    def to_dict(self) -> dict:
        out: dict = {"name": self.name}
        for key in ("precision", "recall", "f1", "accuracy", "support"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsRow":
        return cls(
            name=obj["name"],
            precision=obj.get("precision"),
            recall=obj.get("recall"),
            f1=obj.get("f1"),
            accuracy=obj.get("accuracy"),
            support=obj.get("support"),
        )


def _row_from_prf(name: str, result: PRF) -> MetricsRow:
    return MetricsRow(
        name=name,
        precision=result.precision,
        recall=result.recall,
        f1=result.f1,
        support=result.tp + result.fn,
    )


def _spans_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _keyed_items(items: Mapping[str, Iterable[Triplet]]):
    """Qualify triplet parts with their review id so reviews never collide."""
    aspects, opinions, triples, pair_polarity = set(), set(), set(), {}
    for rid, triplets in items.items():
        for t in sorted(triplets, key=lambda t: t.key()):
            a = (rid, t.aspect.start, t.aspect.end)
            o = (rid, t.opinion.start, t.opinion.end)
            aspects.add(a)
            opinions.add(o)
            triples.add((a, o, t.polarity))
            pair_polarity.setdefault((a, o), t.polarity)
    return aspects, opinions, triples, pair_polarity


def _overlap_matcher(a, b) -> bool:
    return a[0] == b[0] and _spans_overlap((a[1], a[2]), (b[1], b[2]))


def score_triplet_map(
    gold: Mapping[str, Iterable[Triplet]],
    pred: Mapping[str, Iterable[Triplet]],
    span_match: str = "exact",
) -> list[MetricsRow]:
    """Score per-review triplet predictions against gold, corpus-wide.

    Aspect and opinion rows compare span sets; the sentiment row holds
    accuracy plus macro precision/recall (F1 is their harmonic mean) over
    pairs whose aspect and opinion spans both matched gold; the overall row
    compares full triplets. ``span_match`` may relax span equality to
    overlap for the extraction rows.
    """
    if span_match not in ("exact", "overlap"):
        raise ValidationError(f"unknown span match criterion {span_match!r}")
    matcher = _overlap_matcher if span_match == "overlap" else None
    g_aspects, g_opinions, g_triples, g_pairs = _keyed_items(gold)
    p_aspects, p_opinions, p_triples, p_pairs = _keyed_items(pred)

    aspect_row = _row_from_prf("aspect_term", prf(g_aspects, p_aspects, matcher))
    opinion_row = _row_from_prf("opinion_term", prf(g_opinions, p_opinions, matcher))
    overall_row = _row_from_prf("overall_triplet", prf(g_triples, p_triples, matcher))

    matched_pairs = sorted(set(g_pairs) & set(p_pairs))
    if matched_pairs:
        gold_labels = [g_pairs[pair] for pair in matched_pairs]
        pred_labels = [p_pairs[pair] for pair in matched_pairs]
        accuracy = sum(1 for g, p in zip(gold_labels, pred_labels) if g == p) / len(matched_pairs)
        per_label_p, per_label_r = [], []
        for label in POLARITIES:
            tp = sum(1 for g, p in zip(gold_labels, pred_labels) if g == p == label)
            n_pred = pred_labels.count(label)
            n_gold = gold_labels.count(label)
            if n_pred == 0 and n_gold == 0:
                continue
            per_label_p.append(tp / n_pred if n_pred else 0.0)
            per_label_r.append(tp / n_gold if n_gold else 0.0)
        macro_p = sum(per_label_p) / len(per_label_p)
        macro_r = sum(per_label_r) / len(per_label_r)
        sentiment_row = MetricsRow(
            name="sentiment_classification",
            precision=macro_p,
            recall=macro_r,
            f1=f1(macro_p, macro_r),
            accuracy=accuracy,
            support=len(matched_pairs),
        )
    else:
        sentiment_row = MetricsRow(name="sentiment_classification", support=0)

    return [aspect_row, opinion_row, sentiment_row, overall_row]


def score_triplets(
    gold: Iterable[Triplet], pred: Iterable[Triplet], span_match: str = "exact"
) -> list[MetricsRow]:
    """Single-review form of :func:`score_triplet_map`."""
    return score_triplet_map({"": list(gold)}, {"": list(pred)}, span_match)


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignment: dict[str, int]  # review id -> fold index

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(rid for rid, f in self.assignment.items() if f == fold)

    def sizes(self) -> list[int]:
        sizes = [0] * self.k
        for fold in self.assignment.values():
            sizes[fold] += 1
        return sizes


def review_stratum(record: AnnotatedReview) -> str:
    """Majority polarity of a review's gold triplets (ties follow label order)."""
    gold = record.require_gold()
    if not gold:
        return "(none)"
    counts = {label: 0 for label in POLARITIES}
    for triplet in gold:
        counts[triplet.polarity] += 1
    best = max(counts.values())
    return next(label for label in POLARITIES if counts[label] == best)


def kfold_split(corpus: Sequence[AnnotatedReview], k: int = 5, seed: int = 42) -> FoldSplit:
    """Deterministic stratified split; fold sizes differ by at most one.

    Reviews are grouped by majority gold polarity, shuffled within each
    stratum, concatenated, and dealt round-robin, which balances both fold
    sizes and per-stratum proportions.
    """
    records = list(corpus)
    if k < 2:
        raise ValidationError("k must be >= 2")
    if len(records) < k:
        raise ValidationError(f"corpus has {len(records)} reviews, fewer than k={k}")
    strata: dict[str, list[str]] = {}
    for record in records:
        strata.setdefault(review_stratum(record), []).append(record.review.id)
    rng = random.Random(seed)
    ordered: list[str] = []
    for label in sorted(strata):
        ids = sorted(strata[label])
        rng.shuffle(ids)
        ordered.extend(ids)
    assignment = {rid: i % k for i, rid in enumerate(ordered)}
    return FoldSplit(k, assignment)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    rows: tuple[MetricsRow, ...]
    seed: int
    config_digest: str
    fold_details: tuple[tuple[MetricsRow, ...], ...] | None = None
    fold_stdev: tuple[MetricsRow, ...] | None = None

    def row(self, name: str) -> MetricsRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def to_dict(self) -> dict:
        out: dict = {
            "schema": REPORT_SCHEMA,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "rows": [row.to_dict() for row in self.rows],
        }
        if self.fold_details is not None:
            out["fold_details"] = [
                [row.to_dict() for row in fold] for fold in self.fold_details
            ]
        if self.fold_stdev is not None:
            out["fold_stdev"] = [row.to_dict() for row in self.fold_stdev]
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsReport":
        if obj.get("schema") != REPORT_SCHEMA:
            raise ValidationError(f"unknown report schema {obj.get('schema')!r}")
        fold_details = None
        if "fold_details" in obj:
            fold_details = tuple(
                tuple(MetricsRow.from_dict(r) for r in fold) for fold in obj["fold_details"]
            )
        fold_stdev = None
        if "fold_stdev" in obj:
            fold_stdev = tuple(MetricsRow.from_dict(r) for r in obj["fold_stdev"])
        return cls(
            rows=tuple(MetricsRow.from_dict(r) for r in obj["rows"]),
            seed=obj["seed"],
            config_digest=obj["config_digest"],
            fold_details=fold_details,
            fold_stdev=fold_stdev,
        )


def write_report(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_report(path: str | Path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _pct(value: float | None) -> str:
    return f"{100.0 * value:.1f}%" if value is not None else "-"


def render_report(report: MetricsReport) -> str:
    """Fixed-width table, one row per subtask, percentages to one decimal."""
    header = f"{'Metric':<30} {'Precision':>9} {'Recall':>9} {'F1 Score':>9} {'Accuracy':>9}"
    lines = [header, "-" * len(header)]
    for row in report.rows:
        lines.append(
            f"{ROW_TITLES.get(row.name, row.name):<30} {_pct(row.precision):>9} "
            f"{_pct(row.recall):>9} {_pct(row.f1):>9} {_pct(row.accuracy):>9}"
        )
    if report.fold_stdev is not None:
        lines.append("")
        lines.append("Per-fold standard deviation:")
        for row in report.fold_stdev:
            lines.append(
                f"{ROW_TITLES.get(row.name, row.name):<30} {_pct(row.precision):>9} "
                f"{_pct(row.recall):>9} {_pct(row.f1):>9} {_pct(row.accuracy):>9}"
            )
    if report.fold_details:
        lines.append("")
        for i, fold in enumerate(report.fold_details):
            lines.append(f"Fold {i}:")
            for row in fold:
                lines.append(
                    f"  {ROW_TITLES.get(row.name, row.name):<28} {_pct(row.precision):>9} "
                    f"{_pct(row.recall):>9} {_pct(row.f1):>9} {_pct(row.accuracy):>9}"
                )
    lines.append("")
    lines.append(f"seed={report.seed} config_digest={report.config_digest}")
    return "\n".join(lines)


def _aggregate(folds: Sequence[Sequence[MetricsRow]]):
    """Mean and sample stdev per row and metric, ignoring missing values."""
    means, stdevs = [], []
    for idx, name in enumerate(ROW_NAMES):
        mean_kwargs: dict = {"name": name}
        std_kwargs: dict = {"name": name}
        for metric in ("precision", "recall", "f1", "accuracy"):
            values = [
                getattr(fold[idx], metric)
                for fold in folds
                if getattr(fold[idx], metric) is not None
            ]
            if values:
                mean_kwargs[metric] = sum(values) / len(values)
                std_kwargs[metric] = statistics.stdev(values) if len(values) > 1 else 0.0
        supports = [fold[idx].support for fold in folds if fold[idx].support is not None]
        if supports:
            mean_kwargs["support"] = sum(supports)
        means.append(MetricsRow(**mean_kwargs))
        stdevs.append(MetricsRow(**std_kwargs))
    return tuple(means), tuple(stdevs)


def cross_validate(
    corpus: Sequence[AnnotatedReview],
    config,
    k: int | None = None,
    seed: int | None = None,
) -> MetricsReport:
    """Train on k-1 folds, evaluate on the held-out fold, aggregate.

    The report carries per-fold rows, mean and stdev, the seed, and the
    configuration digest for reproducibility.
    """
    from .pipeline import extract_review_triplets, train_pipeline  # avoids an import cycle

    records = list(corpus)
    k = k if k is not None else config.eval.k
    seed = seed if seed is not None else config.eval.seed
    split = kfold_split(records, k=k, seed=seed)
    by_id = {r.review.id: r for r in records}
    fold_rows: list[tuple[MetricsRow, ...]] = []
    for fold in range(k):
        held_out = [by_id[rid] for rid in split.fold_ids(fold)]
        training = [r for r in records if split.assignment[r.review.id] != fold]
        try:
            model = train_pipeline(training, config)
        except ValidationError as exc:
            raise ValidationError(f"fold {fold}: training failed: {exc}") from None
        gold = {r.review.id: sorted(r.require_gold(), key=lambda t: t.key()) for r in held_out}
        pred = {
            r.review.id: [e.triplet for e in extract_review_triplets(model, r.review)]
            for r in held_out
        }
        fold_rows.append(tuple(score_triplet_map(gold, pred, config.eval.span_match)))
    means, stdevs = _aggregate(fold_rows)
    return MetricsReport(
        rows=means,
        seed=seed,
        config_digest=config.digest(),
        fold_details=tuple(fold_rows),
        fold_stdev=stdevs,
    )
