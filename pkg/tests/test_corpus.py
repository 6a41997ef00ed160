"""Corpus format, adjudication, agreement, and statistics tests."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnaste.corpus import (
    AnnotationRecord,
    Span,
    Triplet,
    adjudicate,
    adjudicate_corpus,
    agreement,
    check_manifest,
    corpus_stats,
    parse_corpus,
    serialize_corpus,
    validate_corpus,
    write_corpus,
)
from bnaste.errors import CorpusFormatError, ValidationError
from bnaste.synth import generate_corpus

from conftest import make_annotated, make_triplet


def record_line(**overrides) -> str:
    obj = {
        "id": "r1",
        "platform": "daraz",
        "text": "ভালো ফোন",
        "annotations": [
            {
                "annotator": "a",
                "triplets": [
                    {
                        "aspect": {"start": 5, "end": 8},
                        "opinion": {"start": 0, "end": 4},
                        "polarity": "positive",
                    }
                ],
            }
        ],
    }
    obj.update(overrides)
    return json.dumps(obj, ensure_ascii=False)


class TestParse:
    def test_minimal_record(self):
        corpus = parse_corpus(record_line().encode("utf-8"))
        assert len(corpus) == 1
        record = corpus[0]
        assert record.review.id == "r1"
        assert len(record.annotations) == 1
        (triplet,) = record.annotations[0].triplets
        assert triplet.polarity == "positive"
        assert record.gold is None

    def test_span_out_of_bounds_names_review(self):
        line = record_line(
            annotations=[
                {
                    "annotator": "a",
                    "triplets": [
                        {
                            "aspect": {"start": 5, "end": 99},
                            "opinion": {"start": 0, "end": 4},
                            "polarity": "positive",
                        }
                    ],
                }
            ]
        )
        with pytest.raises(CorpusFormatError, match="r1"):
            parse_corpus(line.encode("utf-8"))

    def test_duplicate_id(self):
        data = record_line() + "\n" + record_line()
        with pytest.raises(CorpusFormatError, match="duplicate review id"):
            parse_corpus(data.encode("utf-8"))

    def test_malformed_json_names_line(self):
        data = record_line() + "\n{not json"
        with pytest.raises(CorpusFormatError, match="line 2"):
            parse_corpus(data.encode("utf-8"))

    def test_missing_field(self):
        with pytest.raises(CorpusFormatError, match="'platform'"):
            parse_corpus('{"id": "x", "text": "ক"}'.encode("utf-8"))

    def test_bad_polarity(self):
        line = record_line(
            annotations=[
                {
                    "annotator": "a",
                    "triplets": [
                        {
                            "aspect": {"start": 5, "end": 8},
                            "opinion": {"start": 0, "end": 4},
                            "polarity": "meh",
                        }
                    ],
                }
            ]
        )
        with pytest.raises(CorpusFormatError, match="polarity"):
            parse_corpus(line.encode("utf-8"))

    def test_duplicate_triplets_within_record(self):
        t = {
            "aspect": {"start": 5, "end": 8},
            "opinion": {"start": 0, "end": 4},
            "polarity": "positive",
        }
        line = record_line(annotations=[{"annotator": "a", "triplets": [t, dict(t)]}])
        with pytest.raises(CorpusFormatError, match="duplicate triplets"):
            parse_corpus(line.encode("utf-8"))

    def test_mixed_platform_fixture_counts(self, tmp_path):
        # Hand-built manifest: 4 daraz, 3 facebook, 2 rokomari, 1 other.
        plan = ["daraz"] * 4 + ["facebook"] * 3 + ["rokomari"] * 2 + ["other"]
        corpus = [
            make_annotated(rid=f"r{i}", platform=p, triplets=(make_triplet(),))
            for i, p in enumerate(plan)
        ]
        stats = corpus_stats(corpus)
        manifest = {"per_platform": {"daraz": 4, "facebook": 3, "rokomari": 2, "other": 1}, "total": 10}
        assert check_manifest(stats, manifest) == []
        assert stats.total_reviews == sum(stats.per_platform.values())

    def test_roundtrip(self):
        corpus = generate_corpus(25, seed=3)
        again = parse_corpus(serialize_corpus(corpus).encode("utf-8"))
        assert again == corpus

    def test_roundtrip_via_file(self, tmp_path):
        corpus = generate_corpus(10, seed=4)
        path = tmp_path / "corpus.jsonl"
        write_corpus(corpus, path)
        assert parse_corpus(path) == corpus


class TestAdjudicate:
    def test_unanimous(self):
        t = make_triplet()
        records = [AnnotationRecord("a", frozenset({t})), AnnotationRecord("b", frozenset({t}))]
        gold, conflicts = adjudicate(records)
        assert gold == frozenset({t})
        assert conflicts == frozenset()

    def test_one_of_two_is_conflict(self):
        t1, t2 = make_triplet(), make_triplet(polarity="negative")
        records = [AnnotationRecord("a", frozenset({t1})), AnnotationRecord("b", frozenset({t2}))]
        gold, conflicts = adjudicate(records)
        assert gold == frozenset()
        assert {t.key() for t in conflicts} == {t1.key(), t2.key()}

    def test_two_of_three_majority(self):
        t = make_triplet()
        records = [
            AnnotationRecord("a", frozenset({t})),
            AnnotationRecord("b", frozenset({t})),
            AnnotationRecord("c", frozenset()),
        ]
        gold, conflicts = adjudicate(records)
        assert {x.key() for x in gold} == {t.key()}
        assert conflicts == frozenset()

    def test_fewer_than_two_records(self):
        with pytest.raises(ValidationError):
            adjudicate([AnnotationRecord("a", frozenset())])

    def test_category_merge_is_order_independent(self):
        t_none = make_triplet(category=None)
        t_bat = make_triplet(category="Battery Life")
        records = [
            AnnotationRecord("a", frozenset({t_none})),
            AnnotationRecord("b", frozenset({t_bat})),
        ]
        gold_ab, _ = adjudicate(records)
        gold_ba, _ = adjudicate(list(reversed(records)))
        assert gold_ab == gold_ba
        (merged,) = gold_ab
        assert merged.category == "Battery Life"


@st.composite
def annotation_sets(draw):
    n_annotators = draw(st.integers(2, 5))
    pool = [
        make_triplet(a=(0, 2), o=(3, 5), polarity="positive"),
        make_triplet(a=(0, 2), o=(3, 5), polarity="negative"),
        make_triplet(a=(6, 8), o=(3, 5), polarity="neutral"),
        make_triplet(a=(6, 8), o=(9, 11), polarity="positive"),
    ]
    records = []
    for i in range(n_annotators):
        chosen = draw(st.sets(st.sampled_from(pool), max_size=len(pool)))
        records.append(AnnotationRecord(f"ann{i}", frozenset(chosen)))
    return records


class TestAdjudicateProperties:
    @given(annotation_sets(), st.randoms(use_true_random=False))
    @settings(max_examples=200, deadline=None)
    def test_majority_semantics_and_permutation_invariance(self, records, rnd):
        gold, conflicts = adjudicate(records)
        n = len(records)
        votes: dict = {}
        for record in records:
            for key in {t.key() for t in record.triplets}:
                votes[key] = votes.get(key, 0) + 1
        for key, count in votes.items():
            if count > n / 2:
                assert key in {t.key() for t in gold}
            else:
                assert key in {t.key() for t in conflicts}
        assert {t.key() for t in gold} | {t.key() for t in conflicts} == set(votes)
        shuffled = list(records)
        rnd.shuffle(shuffled)
        assert adjudicate(shuffled) == (gold, conflicts)


class TestAgreement:
    def test_identical(self):
        t = make_triplet()
        records = [AnnotationRecord("a", frozenset({t})), AnnotationRecord("b", frozenset({t}))]
        assert agreement(records) == 1.0

    def test_disjoint(self):
        records = [
            AnnotationRecord("a", frozenset({make_triplet()})),
            AnnotationRecord("b", frozenset({make_triplet(polarity="negative")})),
        ]
        assert agreement(records) == 0.0

    def test_partial_overlap_hand_computed(self):
        t1, t2 = make_triplet(), make_triplet(a=(5, 8), o=(0, 4), polarity="negative")
        records = [
            AnnotationRecord("a", frozenset({t1, t2})),
            AnnotationRecord("b", frozenset({t1})),
        ]
        # P=1.0, R=0.5 -> F1 = 2/3
        assert agreement(records) == pytest.approx(2 / 3)
        assert agreement(list(reversed(records))) == pytest.approx(2 / 3)


class TestStats:
    def test_published_distribution_identities(self):
        # The released dataset's reported counts satisfy their own sums.
        platform_counts = {"daraz": 2431, "facebook": 467, "rokomari": 273, "shajgoj": 82, "other": 92}
        assert sum(platform_counts.values()) == 3345
        category_rows = {
            "Battery Life": (732, 412, 320),
            "Camera Quality": (598, 301, 297),
            "Service": (491, 278, 213),
            "Pricing": (824, 502, 322),
            "Packaging": (321, 189, 132),
        }
        for total, pos, neg in category_rows.values():
            assert pos + neg == total  # neutral column absent, i.e. zero

    def test_stats_invariants_on_generated_corpora(self):
        for seed in (1, 2, 3):
            corpus = generate_corpus(40, seed=seed)
            stats = corpus_stats(corpus)
            assert stats.total_reviews == sum(stats.per_platform.values())
            for counts in stats.per_category.values():
                assert counts.total == counts.positive + counts.negative + counts.neutral

    def test_unadjudicated_errors_with_ids(self):
        corpus = [make_annotated(rid="missing-1", triplets=(make_triplet(),), gold=False)]
        with pytest.raises(ValidationError, match="missing-1"):
            corpus_stats(corpus)

    def test_adjudicate_corpus_fills_gold(self):
        record = make_annotated(triplets=(make_triplet(),), gold=False)
        (filled,) = adjudicate_corpus([record])
        assert filled.gold == frozenset({make_triplet()})


class TestValidateCorpus:
    def test_gold_must_match_majority(self):
        t1, t2 = make_triplet(), make_triplet(polarity="negative")
        record = make_annotated(triplets=(t1,))
        tampered = type(record)(record.review, record.annotations, frozenset({t2}))
        problems = validate_corpus([tampered])
        assert len(problems) == 1 and "majority" in problems[0]
        assert validate_corpus([record]) == []
