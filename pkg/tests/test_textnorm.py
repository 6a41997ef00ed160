"""Normalization, tokenization, and offset-map alignment tests.

The central oracle: any span mapped back to raw text must re-normalize to
exactly the normalized span text.
"""

from __future__ import annotations

import random
import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnaste.errors import ValidationError
from bnaste.textnorm import (
    OffsetMap,
    SpellingLexicon,
    grapheme_clusters,
    load_spelling_lexicon,
    load_stopwords,
    map_span,
    normalize,
    prepare,
    tokenize,
)

from conftest import bangla_soup


def roundtrip_ok(raw: str, lexicon: SpellingLexicon | None = None) -> bool:
    """Every token interval of the normalized text must map to a raw substring
    that re-normalizes to the span text."""
    normalized, offset_map = normalize(raw, lexicon)
    text = tokenize(normalized, offset_map=offset_map)
    tokens = text.tokens
    for width in (1, 2, 3):
        for i in range(len(tokens) - width + 1):
            span = (tokens[i].start, tokens[i + width - 1].end)
            rs, re_ = map_span(offset_map, span)
            again, _ = normalize(raw[rs:re_], lexicon)
            if again != normalized[span[0] : span[1]]:
                return False
    return True


class TestNormalize:
    def test_whitespace_and_punctuation(self):
        normalized, offset_map = normalize("ভালো   ফোন!!")
        assert normalized == "ভালো ফোন"
        text = tokenize(normalized, offset_map=offset_map)
        assert [text.token_text(i) for i in range(2)] == ["ভালো", "ফোন"]
        assert text.token_raw_span(0) == (0, 4)
        start, _ = text.token_raw_span(1)
        assert start == 7  # shifted by the two collapsed spaces

    def test_fixpoint_on_normalized_text(self):
        raw = "ভালো ফোন"
        normalized, offset_map = normalize(raw)
        assert normalized == raw
        assert offset_map.starts == tuple(range(len(raw)))
        assert offset_map.ends == tuple(i + 1 for i in range(len(raw)))

    def test_idempotent(self, rng):
        for _ in range(200):
            raw = bangla_soup(rng)
            once, _ = normalize(raw)
            twice, twice_map = normalize(once)
            assert twice == once
            assert twice_map.starts == tuple(range(len(once)))

    def test_emoji_and_symbols_become_separators(self):
        normalized, _ = normalize("ভালো \U0001F600\U0001F600 ফোন")
        assert normalized == "ভালো ফোন"

    def test_empty_and_junk_only(self):
        for raw in ("", "   ", "!!!", "\U0001F600"):
            normalized, offset_map = normalize(raw)
            assert normalized == ""
            assert offset_map.pairs == ((0, 0),)

    def test_nfc_composition_two_part_vowel(self):
        # E + AA vowel signs compose to the O sign under NFC.
        raw = "কোত"
        normalized, offset_map = normalize(raw)
        assert normalized == "কোত"
        assert unicodedata.is_normalized("NFC", normalized)
        assert map_span(offset_map, (0, 3)) == (0, 4)

    def test_latin_combining_composition(self):
        raw = "café good"
        normalized, offset_map = normalize(raw)
        assert normalized == "café good"
        rs, re_ = map_span(offset_map, (0, 4))
        assert normalize(raw[rs:re_])[0] == "café"

    def test_roundtrip_random(self, rng):
        for _ in range(300):
            assert roundtrip_ok(bangla_soup(rng))


class TestOffsetMap:
    def test_pairs_invariants_random(self, rng):
        for _ in range(300):
            raw = bangla_soup(rng)
            normalized, offset_map = normalize(raw)
            pairs = offset_map.pairs
            assert pairs[0] == (0, 0)
            norm_coords = [p[0] for p in pairs]
            raw_coords = [p[1] for p in pairs]
            assert norm_coords == sorted(set(norm_coords))
            assert raw_coords == sorted(set(raw_coords))
            if normalized:
                assert pairs[-1][0] == len(normalized)  # covers the full length

    def test_map_span_identity(self):
        m = OffsetMap.identity(5)
        assert map_span(m, (1, 4)) == (1, 4)

    def test_map_span_known_collapse(self):
        # Two extra spaces collapse: the second token shifts by exactly two.
        raw = "ক খ   গ ঘ"
        normalized, offset_map = normalize(raw)
        assert normalized == "ক খ গ ঘ"
        assert map_span(offset_map, (4, 5)) == (6, 7)  # "গ"

    def test_map_span_out_of_bounds(self):
        _, offset_map = normalize("ভালো ফোন")
        for span in ((-1, 2), (0, 9), (3, 3), (5, 2)):
            with pytest.raises(ValidationError):
                map_span(offset_map, span)


class TestGraphemeClusters:
    # Hand-segmented fixtures (independent of the implementation).
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("ক্ষতি", ["ক্ষ", "তি"]),  # conjunct + vowel sign
            ("র‍্য", ["র‍্য"]),  # ZWJ conjunct form
            ("ড়", ["ড়"]),  # nukta attaches
            ("কো ড়", ["কো", " ", "ড়"]),
            ("áb", ["á", "b"]),
            ("\U0001F468‍\U0001F469", ["\U0001F468‍\U0001F469"]),  # emoji ZWJ
            ("\U0001F1E7\U0001F1E9\U0001F1FA", ["\U0001F1E7\U0001F1E9", "\U0001F1FA"]),  # flags pair
            ("\r\nক", ["\r\n", "ক"]),
        ],
    )
    def test_fixtures(self, text, expected):
        got = [text[a:b] for a, b in grapheme_clusters(text)]
        assert got == expected

    def test_cluster_never_splits_inside_token(self, rng):
        # Token boundaries fall only on whitespace, so every combining
        # sequence survives inside one token.
        for _ in range(100):
            raw = bangla_soup(rng)
            text = prepare(raw)
            for i in range(text.token_count):
                token = text.token_text(i)
                for a, b in grapheme_clusters(token):
                    assert 0 <= a < b <= len(token)
                assert not token[0].isspace() and not token[-1].isspace()


class TestTokenize:
    def test_two_tokens_no_stopwords(self):
        text = tokenize("ভালো ফোন")
        assert text.token_count == 2
        assert not any(t.is_stopword for t in text.tokens)

    def test_empty(self):
        assert tokenize("").token_count == 0

    def test_stopword_flagging_preserves_offsets(self):
        plain = tokenize("এই ফোন ভালো")
        flagged = tokenize("এই ফোন ভালো", stopwords={"এই"})
        assert len(plain.tokens) == len(flagged.tokens)
        assert [(t.start, t.end) for t in plain.tokens] == [
            (t.start, t.end) for t in flagged.tokens
        ]
        assert [t.is_stopword for t in flagged.tokens] == [True, False, False]

    @given(st.text(alphabet="কখগঘ ", max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_tokens_within_bounds_sorted_nonoverlapping(self, raw):
        normalized, offset_map = normalize(raw)
        text = tokenize(normalized, offset_map=offset_map)
        last_end = 0
        for tok in text.tokens:
            assert last_end <= tok.start < tok.end <= len(normalized)
            assert " " not in normalized[tok.start : tok.end]
            last_end = tok.end


class TestSpellingLexicon:
    def test_whole_token_rewrite_with_offsets(self):
        lexicon = SpellingLexicon({"ভাল": "ভালো"})
        raw = "ফোন ভাল লাগে"
        normalized, offset_map = normalize(raw, lexicon)
        assert normalized == "ফোন ভালো লাগে"
        rs, re_ = map_span(offset_map, (4, 8))  # the rewritten token
        assert raw[rs:re_] == "ভাল"
        assert normalize(raw[rs:re_], lexicon)[0] == "ভালো"

    def test_no_rewrite_inside_tokens(self):
        lexicon = SpellingLexicon({"ভাল": "ভালো"})
        normalized, _ = normalize("ভালবাসা", lexicon)
        assert normalized == "ভালবাসা"  # substring of a longer token untouched

    def test_rewrite_chain_rejected(self):
        with pytest.raises(ValidationError):
            SpellingLexicon({"a": "b", "b": "c"})

    def test_roundtrip_with_lexicon(self, rng):
        lexicon = SpellingLexicon({"কখ": "কখগ", "ঘঙ": "ঘ"})
        for _ in range(150):
            assert roundtrip_ok(bangla_soup(rng), lexicon)

    def test_loaders(self, tmp_path):
        lex_file = tmp_path / "lex.tsv"
        lex_file.write_text("ভাল\tভালো\n# comment\n", encoding="utf-8")
        lexicon = load_spelling_lexicon(lex_file)
        assert lexicon.entries == {"ভাল": "ভালো"}
        bad = tmp_path / "bad.tsv"
        bad.write_text("onlyonecolumn\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_spelling_lexicon(bad)
        stop_file = tmp_path / "stop.txt"
        stop_file.write_text("এই\nআর\n\n", encoding="utf-8")
        assert load_stopwords(stop_file) == frozenset({"এই", "আর"})
