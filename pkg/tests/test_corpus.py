import io
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phonostat.corpus import (
    DuplicateEntryWarning,
    FrequencyVector,
    LexiconError,
    LowCoverageWarning,
    Mode,
    PhonemeInventory,
    ProfileError,
    build_profile,
    common_fraction,
    exclusive_profile,
    load_lexicon,
    rank_spectrum,
    read_lexicon,
    text_statistics,
    to_frequency_vector,
    tokenize,
)

TOY = "the\tDH AH\ncat\tK AE T\na\tAH\nb\tB\nc\tK\nd\tD\n"


@pytest.fixture
def toy():
    return load_lexicon(TOY)


class TestLexicon:
    def test_single_entry(self):
        lex = load_lexicon("cat\tK AE T\n")
        assert lex.entries == {"cat": ("K", "AE", "T")}
        assert set(lex.inventory.symbols) == {"K", "AE", "T"}

    def test_duplicate_keeps_first(self):
        with pytest.warns(DuplicateEntryWarning) as record:
            lex = load_lexicon("cat\tK AE T\ncat\tK AA T\n")
        assert len(record) == 1
        assert lex.entries["cat"] == ("K", "AE", "T")

    @pytest.mark.parametrize("text", ["", "\n\n", ";;; only a comment\n"])
    def test_empty_is_error(self, text):
        with pytest.raises(LexiconError):
            load_lexicon(text)

    def test_missing_tab_is_error(self):
        with pytest.raises(LexiconError):
            load_lexicon("cat K AE T\n")

    def test_declared_inventory_keeps_unused_symbols(self):
        lex = load_lexicon(";;; INVENTORY: ZH K AE T\ncat\tK AE T\n")
        assert lex.inventory.symbols == ("ZH", "K", "AE", "T")
        assert lex.inventory.n == 4

    def test_stress_handling(self):
        text = "about\tAH0 B AW1 T\n"
        assert load_lexicon(text).entries["about"] == ("AH", "B", "AW", "T")
        assert load_lexicon(text, strip_stress=False).entries["about"] == ("AH0", "B", "AW1", "T")

    def test_cmudict_format(self):
        text = ";;; comment\nread  R EH1 D\nread(2)  R IY1 D\nlive L IH1 V # verb\n"
        lex = load_lexicon(text, format="cmudict")
        assert lex.entries == {"read": ("R", "EH", "D"), "live": ("L", "IH", "V")}

    def test_stream_and_bytes_sources(self):
        assert load_lexicon(io.StringIO(TOY)).entries == load_lexicon(TOY.encode()).entries
        assert load_lexicon(io.BytesIO(TOY.encode())).entries == load_lexicon(TOY).entries

    def test_read_by_suffix(self, tmp_path):
        path = tmp_path / "x.dict"
        path.write_text("cat  K AE1 T\n")
        assert read_lexicon(path).entries == {"cat": ("K", "AE", "T")}

    def test_words_are_casefolded(self):
        assert "cat" in load_lexicon("CAT\tK AE T\n")


class TestTokenize:
    @pytest.mark.parametrize("text, expected", [
        ("The cat, the 'cat'.", ["the", "cat", "the", "cat"]),
        ("don't stop", ["don't", "stop"]),
        ("", []),
        ("Don’t", ["don't"]),
        ("well-known 42nd", ["well", "known", "nd"]),
        ("naïve Café", ["naïve", "café"]),
        ("under_score", ["under", "score"]),
    ])
    def test_examples(self, text, expected):
        assert tokenize(text) == expected

    def test_bad_bytes_warn(self):
        with pytest.warns(UnicodeWarning):
            assert tokenize(b"cat \xff dog") == ["cat", "dog"]

    @given(st.text())
    def test_tokens_are_clean(self, text):
        for tok in tokenize(text):
            assert tok and tok == tok.casefold()
            assert not any(ch.isdigit() or ch.isspace() for ch in tok)


class TestProfiles:
    def test_all_tokens(self, toy):
        p = build_profile("t", ["the", "cat", "the"], toy, Mode.ALL)
        assert p.counts == {"DH": 2, "AH": 2, "K": 1, "AE": 1, "T": 1}
        assert p.total == 7 and p.token_count == 3 and p.coverage == 1.0

    def test_distinct_types(self, toy):
        p = build_profile("t", ["the", "cat", "the"], toy, "types")
        assert p.counts == {"DH": 1, "AH": 1, "K": 1, "AE": 1, "T": 1}
        assert p.total == 5 and p.type_count == 2

    def test_zero_coverage(self, toy):
        with pytest.raises(ProfileError) as info:
            build_profile("t", ["zzzq"], toy)
        assert info.value.oov == frozenset({"zzzq"})

    def test_low_coverage_warns_and_reports_oov(self, toy):
        with pytest.warns(LowCoverageWarning):
            p = build_profile("t", ["cat", "zzzq"], toy)
        assert p.oov == {"zzzq"} and p.coverage == 0.5

    def test_exclusive_mode_is_pairwise_only(self, toy):
        with pytest.raises(ValueError):
            build_profile("t", ["cat"], toy, Mode.EXCLUSIVE)

    def test_exclusive_set_difference(self, toy):
        pi = build_profile("i", ["a", "b", "c"], toy, Mode.TYPES)
        pj = build_profile("j", ["b", "c", "d"], toy, Mode.TYPES)
        ei, ej = exclusive_profile(pi, pj, toy)
        assert ei.word_types == {"a"} and ej.word_types == {"d"}
        assert ei.counts == {"AH": 1} and ej.counts == {"D": 1}
        assert ei.mode is Mode.EXCLUSIVE and ei.vs == "j" and ej.vs == "i"

    def test_exclusive_identical_sets_fail(self, toy):
        p = build_profile("i", ["a", "b"], toy, Mode.TYPES)
        with pytest.raises(ProfileError):
            exclusive_profile(p, build_profile("j", ["b", "a"], toy, Mode.TYPES), toy)

    def test_exclusive_disjoint_unchanged(self, toy):
        pi = build_profile("i", ["the", "a"], toy, Mode.TYPES)
        pj = build_profile("j", ["cat", "d"], toy, Mode.TYPES)
        ei, ej = exclusive_profile(pi, pj, toy)
        assert (ei.counts, ei.total) == (pi.counts, pi.total)
        assert (ej.counts, ej.total) == (pj.counts, pj.total)

    def test_exclusive_needs_type_profiles(self, toy):
        p = build_profile("i", ["a"], toy, Mode.ALL)
        with pytest.raises(ValueError):
            exclusive_profile(p, p, toy)

    @pytest.mark.parametrize("wi, wj, expected", [
        (["a", "b"], ["a", "b"], 1.0),
        (["a"], ["b"], 0.0),
        (["a", "b", "c"], ["b", "c", "d", "the"], 0.4),
    ])
    def test_common_fraction(self, toy, wi, wj, expected):
        pi = build_profile("i", wi, toy, Mode.TYPES)
        pj = build_profile("j", wj, toy, Mode.TYPES)
        assert common_fraction(pi, pj) == pytest.approx(expected)

    def test_text_statistics(self, toy):
        st_ = text_statistics("t", ["the", "cat", "the", "zzzq"], toy)
        assert (st_.n_tokens, st_.n_token_phonemes, st_.n_types, st_.n_type_phonemes) == (3, 7, 2, 5)
        assert st_.coverage == 0.75


class TestFrequencies:
    def test_division(self, toy):
        fv = to_frequency_vector(build_profile("t", ["the", "cat", "the"], toy))
        assert fv["DH"] == pytest.approx(2 / 7) and fv["K"] == pytest.approx(1 / 7)
        assert fv["B"] == 0.0 and fv.freqs.sum() == pytest.approx(1.0)

    def test_single_phoneme(self, toy):
        fv = to_frequency_vector(build_profile("t", ["b", "b"], toy))
        assert fv["B"] == 1.0

    def test_rank_spectrum(self):
        fv = FrequencyVector.from_mapping({"a": 0.2, "b": 0.5, "c": 0.3})
        spec = rank_spectrum(fv)
        np.testing.assert_allclose(spec.freqs, [0.5, 0.3, 0.2])
        assert spec.labels == ("b", "c", "a")

    def test_rank_spectrum_ties(self):
        spec = rank_spectrum(FrequencyVector.from_mapping({"c": 1, "a": 1, "b": 1}))
        np.testing.assert_allclose(spec.freqs, [1 / 3] * 3)
        assert spec.labels == ("a", "b", "c")

    @pytest.mark.parametrize("freqs", [[0.5, 0.6], [1.5, -0.5], [1.0]])
    def test_vector_validation(self, freqs):
        with pytest.raises(ValueError):
            FrequencyVector(PhonemeInventory(("a", "b")), np.array(freqs))

    def test_inventory_rejects_duplicates(self):
        with pytest.raises(ValueError):
            PhonemeInventory(("a", "a"))

    def test_synthetic_corpus_profiles(self, lexicon, corpus_dir):
        text = (corpus_dir / "texts" / "ann1.txt").read_text()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            p = build_profile("ann1", tokenize(text), lexicon)
        assert p.coverage == 1.0 and p.inventory.n == 21
