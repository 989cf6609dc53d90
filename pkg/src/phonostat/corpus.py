"""From raw text to phoneme frequency profiles.

Pronunciations come from a plain-text lexicon; words missing from it are
skipped and reported, never guessed. A profile counts phonemes over one of
three word sets: every token, every distinct word type, or the word types
left after removing those shared with another text.
"""

from __future__ import annotations

import enum
import io
import re
import unicodedata
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, TextIO

import numpy as np

from .model import RankedSpectrum

COVERAGE_WARNING = 0.95


class LexiconError(ValueError):
    """Malformed or empty pronunciation lexicon."""


class ProfileError(ValueError):
    """A profile could not be built, usually for lack of in-lexicon words."""

    def __init__(self, message: str, oov: frozenset = frozenset()):
        super().__init__(message)
        self.oov = oov


class DuplicateEntryWarning(UserWarning):
    pass


class LowCoverageWarning(UserWarning):
    pass


class Mode(str, enum.Enum):
    ALL = "all"
    TYPES = "types"
    EXCLUSIVE = "exclusive-types"


@dataclass(frozen=True)
class PhonemeInventory:
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate phoneme symbols")
        if len(symbols) < 2:
            raise ValueError("inventory needs at least two phonemes")
        object.__setattr__(self, "symbols", symbols)

    @property
    def n(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol) -> bool:
        return symbol in self._index

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def _index(self) -> dict[str, int]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.symbols)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def index(self, symbol: str) -> int:
        return self._index[symbol]


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, tuple[str, ...]]
    inventory: PhonemeInventory

    def __post_init__(self):
        for word, phones in self.entries.items():
            bad = [p for p in phones if p not in self.inventory]
            if bad:
                raise LexiconError(f"entry {word!r} uses symbols outside the inventory: {bad}")

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, word: str):
        return self.entries.get(word)


# ---------------------------------------------------------------------------
# lexicon loading

_STRESS = re.compile(r"\d+$")
_VARIANT = re.compile(r"\(\d+\)$")


def _normalize_word(word: str) -> str:
    return unicodedata.normalize("NFC", word).replace("’", "'").casefold()


def load_lexicon(source: BinaryIO | TextIO | str | bytes, format: str = "tsv",
                 strip_stress: bool = True) -> Lexicon:
    """Parse a pronunciation lexicon.

    ``format`` is ``"tsv"`` (``word<TAB>PH1 PH2 ...``, ``;;;`` comments, an
    optional ``;;; INVENTORY: ...`` header) or ``"cmudict"`` (space
    separated, ``word(2)`` marks alternative pronunciations, ``#`` starts a
    trailing comment). Only the first pronunciation of a word is kept.
    Repeating a word in a tsv file emits :class:`DuplicateEntryWarning`;
    cmudict alternates are dropped silently.
    """
    if format not in ("tsv", "cmudict"):
        raise ValueError(f"unknown lexicon format {format!r}")
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)

    entries: dict[str, tuple[str, ...]] = {}
    declared: list[str] = []
    seen: dict[str, None] = {}

    def clean(symbol: str) -> str:
        return _STRESS.sub("", symbol) if strip_stress else symbol

    for lineno, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith(";;;"):
            body = line[3:].strip()
            if body.upper().startswith("INVENTORY:"):
                declared.extend(clean(s) for s in body.split(":", 1)[1].split())
            continue
        if format == "tsv":
            if "\t" not in line:
                raise LexiconError(f"line {lineno}: expected word<TAB>phonemes")
            word, pron = line.split("\t", 1)
            alternate = False
        else:
            line = line.split("#", 1)[0].strip()
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise LexiconError(f"line {lineno}: expected word followed by phonemes")
            word, pron = parts
            alternate = bool(_VARIANT.search(word))
            word = _VARIANT.sub("", word)
        word = _normalize_word(word.strip())
        phones = tuple(clean(p) for p in pron.split())
        if not word or not phones:
            raise LexiconError(f"line {lineno}: empty word or pronunciation")
        if word in entries:
            if not alternate:
                warnings.warn(f"line {lineno}: duplicate entry for {word!r}; keeping the first",
                              DuplicateEntryWarning, stacklevel=2)
            continue
        entries[word] = phones
        for p in phones:
            seen.setdefault(p)

    if not entries:
        raise LexiconError("lexicon contains no entries")
    symbols = list(dict.fromkeys(declared))
    symbols += sorted(p for p in seen if p not in set(symbols))
    return Lexicon(entries, PhonemeInventory(tuple(symbols)))


def read_lexicon(path, format: str | None = None, strip_stress: bool = True) -> Lexicon:
    """Load a lexicon file; the format defaults to ``cmudict`` for ``*.dict`` files."""
    path = str(path)
    if format is None:
        format = "cmudict" if path.endswith(".dict") else "tsv"
    with open(path, encoding="utf-8") as fh:
        return load_lexicon(fh, format, strip_stress)


# ---------------------------------------------------------------------------
# tokenization

_TOKEN = re.compile(r"[^\W\d_]+(?:['’][^\W\d_]+)*")


def tokenize(text: str | bytes) -> list[str]:
    """Case-folded word tokens: maximal letter runs with internal apostrophes.

    Digits, hyphens and all other punctuation separate words. Undecodable
    bytes are replaced (with a warning) rather than rejected.
    """
    if isinstance(text, bytes):
        decoded = text.decode("utf-8", errors="replace")
        bad = decoded.count("�") - text.decode("utf-8", errors="ignore").count("�")
        if bad:
            warnings.warn(f"{bad} undecodable byte sequence(s) replaced", UnicodeWarning,
                          stacklevel=2)
        text = decoded
    # \w also admits superscript digits and similar non-letters; blank them first
    text = "".join(ch if ch.isalpha() or ch in "'’" else " "
                   for ch in unicodedata.normalize("NFC", text))
    return [_normalize_word(m.group()) for m in _TOKEN.finditer(text)]


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class PhonemeProfile:
    text_id: str
    mode: Mode
    inventory: PhonemeInventory
    counts: dict[str, int]
    total: int
    word_types: frozenset[str]
    token_count: int
    in_lexicon_tokens: int
    oov: frozenset[str] = frozenset()
    vs: str | None = None

    def __post_init__(self):
        if self.total != sum(self.counts.values()):
            raise ValueError("total must equal the sum of counts")
        if any(p not in self.inventory for p in self.counts):
            raise ValueError("counts contain symbols outside the inventory")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be non-negative")

    @property
    def coverage(self) -> float:
        return self.in_lexicon_tokens / self.token_count if self.token_count else 0.0

    @property
    def type_count(self) -> int:
        return len(self.word_types)


def _count_phonemes(words: Counter, lexicon: Lexicon) -> Counter:
    counts: Counter = Counter()
    for word, k in words.items():
        for p in lexicon.entries[word]:
            counts[p] += k
    return counts


def build_profile(text_id: str, tokens: Iterable[str], lexicon: Lexicon,
                  mode: Mode | str = Mode.ALL) -> PhonemeProfile:
    """Count phonemes of ``tokens`` over all tokens or over distinct types."""
    mode = Mode(mode)
    if mode is Mode.EXCLUSIVE:
        raise ValueError("exclusive profiles are derived pairwise; use exclusive_profile")
    tokens = list(tokens)
    freq = Counter(tokens)
    known = Counter({w: k for w, k in freq.items() if w in lexicon})
    oov = frozenset(w for w in freq if w not in lexicon)
    if not known:
        raise ProfileError(f"{text_id}: no token found in the lexicon", oov)
    if mode is Mode.TYPES:
        counts = _count_phonemes(Counter(dict.fromkeys(known, 1)), lexicon)
    else:
        counts = _count_phonemes(known, lexicon)
    profile = PhonemeProfile(
        text_id=text_id,
        mode=mode,
        inventory=lexicon.inventory,
        counts=dict(counts),
        total=sum(counts.values()),
        word_types=frozenset(known),
        token_count=len(tokens),
        in_lexicon_tokens=sum(known.values()),
        oov=oov,
    )
    if profile.coverage < COVERAGE_WARNING:
        warnings.warn(f"{text_id}: lexicon covers only {profile.coverage:.1%} of tokens",
                      LowCoverageWarning, stacklevel=2)
    return profile


def exclusive_profile(profile_i: PhonemeProfile, profile_j: PhonemeProfile,
                      lexicon: Lexicon) -> tuple[PhonemeProfile, PhonemeProfile]:
    """Type profiles of two texts after dropping the word types they share."""
    for p in (profile_i, profile_j):
        if p.mode is not Mode.TYPES:
            raise ValueError(f"{p.text_id}: exclusive profiles need a 'types' profile, got {p.mode.value}")
        if p.inventory != lexicon.inventory:
            raise ValueError(f"{p.text_id}: profile was built with a different lexicon")

    def restricted(p: PhonemeProfile, words: frozenset, other: str) -> PhonemeProfile:
        counts = _count_phonemes(Counter(dict.fromkeys(words, 1)), lexicon)
        if not counts:
            raise ProfileError(f"{p.text_id}: no words left after removing those shared with {other}")
        return PhonemeProfile(
            text_id=p.text_id,
            mode=Mode.EXCLUSIVE,
            inventory=p.inventory,
            counts=dict(counts),
            total=sum(counts.values()),
            word_types=words,
            token_count=len(words),
            in_lexicon_tokens=len(words),
            vs=other,
        )

    only_i = profile_i.word_types - profile_j.word_types
    only_j = profile_j.word_types - profile_i.word_types
    return (restricted(profile_i, only_i, profile_j.text_id),
            restricted(profile_j, only_j, profile_i.text_id))


def common_fraction(profile_i: PhonemeProfile, profile_j: PhonemeProfile) -> float:
    """Shared word types over all word types of the two texts (Jaccard index)."""
    a, b = profile_i.word_types, profile_j.word_types
    union = len(a | b)
    if union == 0:
        raise ValueError("both word-type sets are empty")
    return len(a & b) / union


@dataclass(frozen=True)
class TextStatistics:
    """Token/type counts of one text: words, their phonemes, distinct words, theirs."""

    text_id: str
    n_tokens: int
    n_token_phonemes: int
    n_types: int
    n_type_phonemes: int
    coverage: float


def text_statistics(text_id: str, tokens: Iterable[str], lexicon: Lexicon) -> TextStatistics:
    tokens = list(tokens)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowCoverageWarning)
        all_words = build_profile(text_id, tokens, lexicon, Mode.ALL)
        types = build_profile(text_id, tokens, lexicon, Mode.TYPES)
    return TextStatistics(text_id, all_words.in_lexicon_tokens, all_words.total,
                          types.type_count, types.total, all_words.coverage)


# ---------------------------------------------------------------------------
# frequency vectors


@dataclass(frozen=True, eq=False)
class FrequencyVector:
    """Phoneme frequencies aligned with an inventory; unseen phonemes are zero."""

    inventory: PhonemeInventory
    freqs: np.ndarray = field(repr=False)

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float)
        if freqs.shape != (self.inventory.n,):
            raise ValueError("freqs must have one entry per inventory symbol")
        if np.any(freqs < 0) or abs(freqs.sum() - 1.0) > 1e-12:
            raise ValueError("frequencies must be non-negative and sum to one")
        freqs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)

    def __getitem__(self, symbol: str) -> float:
        return float(self.freqs[self.inventory.index(symbol)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.inventory.symbols, self.freqs.tolist()))

    @classmethod
    def from_mapping(cls, mapping: dict[str, float], inventory: PhonemeInventory | None = None):
        if inventory is None:
            inventory = PhonemeInventory(tuple(mapping))
        values = np.array([mapping.get(s, 0.0) for s in inventory.symbols], dtype=float)
        return cls(inventory, values / values.sum())


def to_frequency_vector(profile: PhonemeProfile) -> FrequencyVector:
    if profile.total <= 0:
        raise ValueError(f"{profile.text_id}: empty profile")
    inv = profile.inventory
    counts = np.array([profile.counts.get(s, 0) for s in inv.symbols], dtype=float)
    return FrequencyVector(inv, counts / profile.total)


def rank_spectrum(fv: FrequencyVector) -> RankedSpectrum:
    """Sort frequencies non-increasing; ties go to the lexicographically smaller symbol."""
    order = sorted(range(fv.inventory.n), key=lambda i: (-fv.freqs[i], fv.inventory.symbols[i]))
    freqs = fv.freqs[order]
    return RankedSpectrum(freqs / freqs.sum(), tuple(fv.inventory.symbols[i] for i in order))
