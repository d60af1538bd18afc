from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class TokenizedTweet:
    tweet_id: str
    tokens: tuple[str, ...]


@dataclass
class Corpus:
    ids: list[str]
    documents: list[list[str]]
    vocab: list[str]
    doc_freq: dict[str, int]

    @classmethod
    def from_tokens(cls, docs: Iterable[TokenizedTweet | tuple[str, Sequence[str]]]) -> "Corpus":
        ids, documents = [], []
        for d in docs:
            tid, toks = (d.tweet_id, d.tokens) if isinstance(d, TokenizedTweet) else d
            ids.append(tid)
            documents.append(list(toks))
        df = Counter(w for doc in documents for w in set(doc))
        return cls(ids, documents, sorted(df), dict(df))

    def __len__(self):
        return len(self.documents)

    @property
    def word_index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.vocab)}


def tfidf_weights(documents: Sequence[Sequence[str]]) -> list[dict[str, float]]:
    """``tf(w, d) * ln(N / df(w))`` with raw counts as tf."""
    n = len(documents)
    df = Counter(w for doc in documents for w in set(doc))
    out = []
    for doc in documents:
        tf = Counter(doc)
        out.append({w: c * math.log(n / df[w]) for w, c in sorted(tf.items())})
    return out


def compute_tfidf(corpus: Corpus) -> list[dict[str, float]]:
    if not len(corpus):
        raise ValueError("empty corpus")
    return tfidf_weights(corpus.documents)
