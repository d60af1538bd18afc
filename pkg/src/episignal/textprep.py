"""Multilingual tweet preprocessing: cleaning, spell correction, filtering, stemming."""

from __future__ import annotations

import csv
import functools
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

QUERY_KEYWORDS = frozenset({"coronavirus", "koronavirus", "corona", "covid-19", "covid"})
LANGUAGES = ("en", "fr", "de", "nl")
KEEP_POS = ("NOUN", "VERB", "ADJ", "ADV", "NN", "VB", "JJ", "RB")

_URL = re.compile(r"(?:[a-z][a-z0-9+.-]*://|www\.)\S*")
_MENTION = re.compile(r"@\w+")
_RT = re.compile(r"\brt\b")


def _strip_non_letters(text: str) -> str:
    return "".join(c if c.isalpha() or c.isspace() else " " for c in text)


@functools.lru_cache(maxsize=None)
def bundled_stopwords(lang: str) -> frozenset[str]:
    text = resources.files("episignal.data.stopwords").joinpath(f"{lang}.txt").read_text("utf-8")
    return frozenset(w for line in text.splitlines()
                     for w in _strip_non_letters(line.strip().lower()).split())


def load_stopword_file(path: str | Path) -> frozenset[str]:
    text = Path(path).read_text("utf-8")
    return frozenset(w for line in text.splitlines()
                     for w in _strip_non_letters(line.strip().lower()).split())


def load_frequency_dictionary(path: str | Path) -> dict[str, int]:
    with open(path, encoding="utf-8", newline="") as fh:
        return {row[0].strip().lower(): int(row[1])
                for row in csv.reader(fh, delimiter="\t") if len(row) >= 2 and row[0].strip()}


def load_pos_lexicon(path: str | Path) -> dict[str, str]:
    with open(path, encoding="utf-8", newline="") as fh:
        return {row[0].strip().lower(): row[1].strip().upper()
                for row in csv.reader(fh, delimiter="\t") if len(row) >= 2 and row[0].strip()}


@dataclass
class PreprocessConfig:
    stopword_lists: Mapping[str, frozenset[str]] = field(
        default_factory=lambda: {lang: bundled_stopwords(lang) for lang in LANGUAGES})
    query_keywords: frozenset[str] = QUERY_KEYWORDS
    spell_correct: bool = False
    dictionary_path: str | None = None
    pos_filter: bool = False
    lexicon_path: str | None = None
    stemmer: str = "none"

    def __post_init__(self):
        self.query_keywords = frozenset(k.lower() for k in self.query_keywords)
        if self.stemmer not in ("none", "porter"):
            raise ValueError(f"unknown stemmer {self.stemmer!r}")
        if self.spell_correct and not (self.dictionary_path and Path(self.dictionary_path).exists()):
            raise FileNotFoundError(f"spell dictionary not found: {self.dictionary_path}")
        if self.pos_filter and not (self.lexicon_path and Path(self.lexicon_path).exists()):
            raise FileNotFoundError(f"POS lexicon not found: {self.lexicon_path}")
        self._stopwords = frozenset().union(*self.stopword_lists.values())
        # keywords are matched after punctuation stripping, so split them the same way
        self._keywords = frozenset(w for k in self.query_keywords
                                   for w in _strip_non_letters(k).split())
        self._speller = SymSpell(load_frequency_dictionary(self.dictionary_path)) \
            if self.spell_correct else None
        self._lexicon = load_pos_lexicon(self.lexicon_path) if self.pos_filter else None
        self._stem = _porter() if self.stemmer == "porter" else None

    def manifest(self) -> dict:
        return {"languages": sorted(self.stopword_lists), "query_keywords": sorted(self.query_keywords),
                "spell_correct": self.spell_correct, "dictionary_path": self.dictionary_path,
                "pos_filter": self.pos_filter, "lexicon_path": self.lexicon_path,
                "stemmer": self.stemmer,
                "stages": ["lowercase", "urls", "mentions_rt", "punct_digits", "spell",
                           "tokenize", "stopwords", "keywords", "pos", "stem"]}


@functools.lru_cache(maxsize=1)
def _porter():
    from nltk.stem.porter import PorterStemmer

    return PorterStemmer().stem


def _osa_within_one(a: str, b: str) -> bool:
    """Optimal-string-alignment distance <= 1."""
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        diff = [i for i in range(la) if a[i] != b[i]]
        if len(diff) == 1:
            return True
        return (len(diff) == 2 and diff[1] == diff[0] + 1
                and a[diff[0]] == b[diff[1]] and a[diff[1]] == b[diff[0]])
    if la > lb:
        a, b = b, a
    # b is one char longer
    i = 0
    while i < len(a) and a[i] == b[i]:
        i += 1
    return a[i:] == b[i + 1:]


class SymSpell:
    """Symmetric-delete lookup at edit distance 1."""

    def __init__(self, frequencies: Mapping[str, int]):
        self.freq = dict(frequencies)
        self._deletes: dict[str, set[str]] = {}
        for word in self.freq:
            for key in self._variants(word):
                self._deletes.setdefault(key, set()).add(word)

    @staticmethod
    def _variants(word: str) -> set[str]:
        return {word} | {word[:i] + word[i + 1:] for i in range(len(word))}

    def correct(self, word: str) -> str:
        if word in self.freq:
            return word
        candidates = set()
        for key in self._variants(word):
            candidates |= self._deletes.get(key, set())
        candidates = [c for c in candidates if _osa_within_one(word, c)]
        if not candidates:
            return word
        return min(candidates, key=lambda c: (-self.freq[c], c))


def clean_text(text: str) -> str:
    """Lowercase and strip URLs, mentions, ``rt`` markers, punctuation and digits."""
    text = unicodedata.normalize("NFC", text).lower()
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    text = _strip_non_letters(text)
    return _RT.sub(" ", text)


def preprocess(text: str, config: PreprocessConfig | None = None) -> list[str]:
    config = config or default_config()
    words = clean_text(text).split()
    if config._speller is not None:
        words = [config._speller.correct(w) for w in words]
    tokens = [w for w in words if w not in config._stopwords and w not in config._keywords]
    if config._lexicon is not None:
        lex = config._lexicon
        tokens = [t for t in tokens if t not in lex or lex[t].startswith(KEEP_POS)]
    if config._stem is not None:
        tokens = [config._stem(t) for t in tokens]
    return tokens


@functools.lru_cache(maxsize=1)
def default_config() -> PreprocessConfig:
    return PreprocessConfig()
