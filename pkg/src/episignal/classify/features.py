from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

COUNTRIES = ("Belgium", "France", "GR", "Germany", "Luxembourg")
N_CATEGORIES = 7
CATEGORY_NAMES = {
    1: "Wuhan & China",
    2: "Measures",
    3: "Local news",
    4: "International news",
    5: "Policy and daily life",
    6: "Racism",
    7: "Other",
}


@dataclass(frozen=True)
class LabeledTopic:
    top_words: tuple[str, ...]
    country: str
    category: int

    def __post_init__(self):
        if not 1 <= self.category <= N_CATEGORIES:
            raise ValueError(f"category must be in 1..{N_CATEGORIES}, got {self.category}")
        if not self.top_words:
            raise ValueError("top_words must be non-empty")


def load_labeled_topics(path: str | Path) -> list[LabeledTopic]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [LabeledTopic(tuple(row["top_words"].split()), row["country"].strip(),
                             int(row["category"])) for row in reader]


@dataclass
class TopicVectorizer:
    """TF-IDF over topic word lists plus a country block.

    ``mode="onehot"`` appends one column per country; ``mode="integer"``
    appends a single alphabetical label code.
    """

    vocab: list[str]
    idf: np.ndarray
    mode: str = "onehot"
    countries: tuple[str, ...] = COUNTRIES

    def __post_init__(self):
        self._index = {w: i for i, w in enumerate(self.vocab)}

    @classmethod
    def fit(cls, word_lists: Sequence[Sequence[str]], mode: str = "onehot") -> "TopicVectorizer":
        if mode not in ("onehot", "integer"):
            raise ValueError(f"unknown country encoding {mode!r}")
        if not word_lists:
            raise ValueError("no topics to fit")
        n = len(word_lists)
        df = Counter(w for words in word_lists for w in set(words))
        vocab = sorted(df)
        idf = np.array([math.log(n / df[w]) for w in vocab])
        return cls(vocab, idf, mode)

    @property
    def n_features(self) -> int:
        return len(self.vocab) + (len(self.countries) if self.mode == "onehot" else 1)

    def transform_one(self, words: Sequence[str], country: str) -> np.ndarray:
        index = self._index
        tf = np.zeros(len(self.vocab))
        for w in words:
            i = index.get(w)
            if i is not None:
                tf[i] += 1
        if country not in self.countries:
            raise ValueError(f"unknown country {country!r}")
        c = self.countries.index(country)
        if self.mode == "onehot":
            tail = np.zeros(len(self.countries))
            tail[c] = 1.0
        else:
            tail = np.array([float(c)])
        return np.concatenate([tf * self.idf, tail])

    def transform(self, topics: Sequence[LabeledTopic]) -> np.ndarray:
        return np.array([self.transform_one(t.top_words, t.country) for t in topics]).reshape(
            len(topics), self.n_features)

    def to_json(self) -> dict:
        return {"vocab": self.vocab, "idf": [float(x) for x in self.idf], "mode": self.mode,
                "countries": list(self.countries)}

    @classmethod
    def from_json(cls, data: dict) -> "TopicVectorizer":
        return cls(list(data["vocab"]), np.array(data["idf"], dtype=float), data["mode"],
                   tuple(data["countries"]))


def build_features(topics: Sequence[LabeledTopic], mode: str = "onehot"):
    """Fit a vectorizer on ``topics`` and return ``(X, vectorizer)``."""
    if not topics:
        raise ValueError("no topics")
    vec = TopicVectorizer.fit([t.top_words for t in topics], mode)
    return vec.transform(topics), vec
