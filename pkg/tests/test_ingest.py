"""Platform export adapters and relevance-filter tests."""

from __future__ import annotations

import pytest

from bnaste.errors import ValidationError
from bnaste.ingest import (
    FilterPolicy,
    emoji_ratio,
    filter_reviews,
    read_platform_export,
)

from conftest import make_review


def write_csv(path, rows, header="review_text,when"):
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")


class TestReadExport:
    def test_three_rows(self, tmp_path):
        path = tmp_path / "export.csv"
        write_csv(path, ["ভালো ফোন,2024-01-01", "খারাপ জিনিস,2024-01-02", "দারুণ দাম,2024-01-03"])
        reviews, skipped = read_platform_export(
            path, "daraz", {"text": "review_text", "collected_at": "when"}
        )
        assert len(reviews) == 3
        assert skipped == {}
        assert all(r.platform == "daraz" for r in reviews)
        assert reviews[0].collected_at == "2024-01-01"

    def test_deterministic_ids(self, tmp_path):
        path = tmp_path / "export.csv"
        write_csv(path, ["ভালো ফোন,x", "খারাপ জিনিস,y"])
        first, _ = read_platform_export(path, "daraz", {"text": "review_text"})
        second, _ = read_platform_export(path, "daraz", {"text": "review_text"})
        assert [r.id for r in first] == [r.id for r in second]
        assert len({r.id for r in first}) == 2

    def test_identical_rows_get_distinct_ids(self, tmp_path):
        path = tmp_path / "export.csv"
        write_csv(path, ["ভালো ফোন,x", "ভালো ফোন,x"])
        reviews, _ = read_platform_export(path, "daraz", {"text": "review_text"})
        assert len({r.id for r in reviews}) == 2

    def test_empty_rows_reported(self, tmp_path):
        path = tmp_path / "export.csv"
        write_csv(path, ["ভালো ফোন,x", ",y", "   ,z", "দারুণ,w"])
        reviews, skipped = read_platform_export(path, "daraz", {"text": "review_text"})
        assert len(reviews) == 2
        assert skipped == {"empty": 2}

    def test_missing_text_column(self, tmp_path):
        path = tmp_path / "export.csv"
        write_csv(path, ["ভালো,x"])
        with pytest.raises(ValidationError, match="nosuch"):
            read_platform_export(path, "daraz", {"text": "nosuch"})
        with pytest.raises(ValidationError, match="text"):
            read_platform_export(path, "daraz", {})

    def test_undecodable_bytes(self, tmp_path):
        path = tmp_path / "export.csv"
        path.write_bytes(b"review_text\nok\n\xff\xfe broken\n")
        with pytest.raises(ValidationError, match="byte offset"):
            read_platform_export(path, "daraz", {"text": "review_text"})

    def test_jsonl_export(self, tmp_path):
        path = tmp_path / "export.jsonl"
        path.write_text(
            '{"t": "ভালো ফোন", "cat": "phone"}\n{"t": "বাজে জিনিস"}\n', encoding="utf-8"
        )
        reviews, _ = read_platform_export(
            path, "facebook", {"text": "t", "product_category": "cat"}
        )
        assert len(reviews) == 2
        assert reviews[0].product_category == "phone"
        assert reviews[1].product_category is None

    def test_unknown_platform(self, tmp_path):
        path = tmp_path / "export.csv"
        write_csv(path, ["ক,x"])
        with pytest.raises(ValidationError, match="platform"):
            read_platform_export(path, "amazon", {"text": "review_text"})


class TestEmojiRatio:
    def test_ten_emoji_one_word(self):
        text = "\U0001F600" * 10 + " ভালো"
        assert emoji_ratio(text) == pytest.approx(10 / 11)

    def test_no_emoji(self):
        assert emoji_ratio("ভালো ফোন") == 0.0


class TestFilterReviews:
    def test_emoji_heavy_rejected(self):
        review = make_review(text="\U0001F600" * 10 + " ভালো")
        kept, report = filter_reviews([review], FilterPolicy(max_emoji_ratio=0.5))
        assert kept == []
        assert report.rejected == {"emoji_ratio": 1}

    def test_duplicate_rejected(self):
        reviews = [
            make_review("r1", "ভালো ফোন"),
            make_review("r2", "  ভালো   ফোন "),  # same after whitespace collapse
        ]
        kept, report = filter_reviews(reviews, FilterPolicy(dedupe=True))
        assert [r.id for r in kept] == ["r1"]
        assert report.duplicates_removed == 1

    def test_blocked_pattern_first_reason(self):
        review = make_review(text="offer!! http://spam.example \U0001F600" * 3)
        policy = FilterPolicy(blocked_patterns=("http://",), max_emoji_ratio=0.1)
        kept, report = filter_reviews([review], policy)
        assert report.rejected == {"blocked_pattern": 1}

    def test_word_count(self):
        kept, report = filter_reviews(
            [make_review(text="ভালো")], FilterPolicy(min_word_count=2)
        )
        assert kept == [] and report.rejected == {"word_count": 1}

    def test_constructed_fixture_counts(self):
        # 80 clean + 5 blocked + 5 emoji-heavy + 5 short + 5 duplicates.
        reviews = [make_review(f"ok{i}", f"ভালো ফোন নম্বর {i}") for i in range(80)]
        reviews += [make_review(f"blk{i}", f"spamword দেখুন {i}") for i in range(5)]
        reviews += [make_review(f"emo{i}", "\U0001F600" * 9 + f" কথা{i}") for i in range(5)]
        reviews += [make_review(f"sh{i}", "ছোট") for i in range(5)]
        reviews += [make_review(f"dup{i}", "ভালো ফোন নম্বর 0") for i in range(5)]
        policy = FilterPolicy(
            max_emoji_ratio=0.5,
            min_word_count=2,
            blocked_patterns=("spamword",),
            dedupe=True,
        )
        kept, report = filter_reviews(reviews, policy)
        assert report.rejected == {"blocked_pattern": 5, "emoji_ratio": 5, "word_count": 5}
        assert report.duplicates_removed == 5
        assert report.accepted == 80
        assert report.balances(100)

    def test_conservation_and_idempotence(self, rng):
        reviews = []
        for i in range(200):
            text = " ".join(
                rng.choice(["ভালো", "ফোন", "বাজে", "\U0001F600", "দাম", "!"])
                for _ in range(rng.randint(1, 6))
            )
            if text.strip():
                reviews.append(make_review(f"r{i}", text))
        policy = FilterPolicy(max_emoji_ratio=0.4, min_word_count=2, dedupe=True)
        kept, report = filter_reviews(reviews, policy)
        assert report.balances(len(reviews))
        again, report2 = filter_reviews(kept, policy)
        assert again == kept
        assert report2.rejected == {} and report2.duplicates_removed == 0

    def test_determinism(self):
        reviews = [make_review(f"r{i}", f"কথা {i} " + "\U0001F600" * (i % 4)) for i in range(50)]
        policy = FilterPolicy(max_emoji_ratio=0.3, min_word_count=2)
        first = filter_reviews(reviews, policy)
        second = filter_reviews(reviews, policy)
        assert first[0] == second[0]
        assert first[1].to_dict() == second[1].to_dict()

    def test_policy_validation(self):
        with pytest.raises(ValidationError):
            FilterPolicy(max_emoji_ratio=1.5)
        with pytest.raises(ValidationError):
            FilterPolicy(min_word_count=0)
