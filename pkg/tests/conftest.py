"""Shared fixtures: a small synthetic lexicon and an author-structured corpus."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from phonostat.corpus import load_lexicon
from phonostat.model import moment_cache

PHONEMES = ("AA", "AE", "AH", "B", "D", "EH", "F", "G", "IY", "K", "L", "M", "N", "OW", "P", "R",
            "S", "T", "UW", "V", "Z")


def synthetic_lexicon_text(n_words: int = 400, seed: int = 7) -> str:
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.full(len(PHONEMES), 0.8))
    letters = "abcdefghijklmnopqrstuvwxyz"
    lines = [";;; synthetic lexicon", ";;; INVENTORY: " + " ".join(PHONEMES)]
    seen = set()
    while len(seen) < n_words:
        word = "".join(rng.choice(list(letters), size=rng.integers(2, 8)))
        if word in seen:
            continue
        seen.add(word)
        phones = rng.choice(PHONEMES, size=rng.integers(1, 7), p=weights)
        lines.append(f"{word}\t{' '.join(phones)}")
    return "\n".join(lines) + "\n"


def synthetic_corpus(root: Path, lexicon_text: str, authors=("ann", "bob", "cy"), per_author: int = 3,
                     length: int = 3000, seed: int = 11, held_out: int = 1) -> Path:
    """Each author draws words from a private Zipf-like preference; returns authors.csv."""
    rng = np.random.default_rng(seed)
    words = [ln.split("\t")[0] for ln in lexicon_text.splitlines() if ln and not ln.startswith(";;;")]
    texts = root / "texts"
    texts.mkdir(parents=True, exist_ok=True)
    rows = []
    for a in authors:
        # private vocabulary and word preferences per author
        vocab = rng.permutation(len(words))[: int(0.6 * len(words))]
        p = 1.0 / np.arange(1, len(vocab) + 1) ** 1.1
        p /= p.sum()
        for k in range(per_author + (held_out if a == authors[0] else 0)):
            draw = vocab[rng.choice(len(vocab), size=length, p=p)]
            body = " ".join(words[i] for i in draw)
            text_id = f"{a}{k + 1}"
            (texts / f"{text_id}.txt").write_text(body.capitalize() + ".\n", encoding="utf-8")
            author = "?" if k >= per_author else a
            rows.append((text_id, author, f"texts/{text_id}.txt"))
    authors_csv = root / "authors.csv"
    with open(authors_csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("text_id", "author", "path"))
        w.writerows(rows)
    return authors_csv


@pytest.fixture(scope="session")
def lexicon_text() -> str:
    return synthetic_lexicon_text()


@pytest.fixture(scope="session")
def lexicon(lexicon_text):
    return load_lexicon(lexicon_text)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory, lexicon_text) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    (root / "lexicon.tsv").write_text(lexicon_text, encoding="utf-8")
    synthetic_corpus(root, lexicon_text)
    return root


@pytest.fixture
def fresh_moment_cache():
    moment_cache.clear()
    yield moment_cache
    moment_cache.clear()


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[k])
