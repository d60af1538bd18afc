"""Collapsed Gibbs LDA over TF-IDF pseudo-counts."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .corpus import Corpus, compute_tfidf


class LdaError(ValueError):
    pass


@dataclass
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    vocab: list[str]
    topic_word: np.ndarray
    doc_topic: np.ndarray
    seed: int
    iterations: int

    def top_words(self, topic: int, n: int = 10) -> list[str]:
        order = sorted(range(len(self.vocab)), key=lambda w: (-self.topic_word[topic, w], self.vocab[w]))
        return [self.vocab[w] for w in order[:n]]


def quantize(corpus: Corpus, tfidf: list[dict[str, float]], q: int = 10) -> list[dict[str, int]]:
    """Integer pseudo-counts ``round(q * w / max_w)`` with the corpus-wide max.

    A nonempty document that quantizes to nothing keeps its single best
    token (highest weight, then highest raw count, then alphabetical).
    """
    max_w = max((w for doc in tfidf for w in doc.values()), default=0.0)
    out = []
    for doc, weights in zip(corpus.documents, tfidf):
        counts = {}
        if max_w > 0:
            for w, val in weights.items():
                c = int(np.floor(q * val / max_w + 0.5))
                if c > 0:
                    counts[w] = c
        if not counts and doc:
            raw = {w: doc.count(w) for w in set(doc)}
            best = min(raw, key=lambda w: (-weights.get(w, 0.0), -raw[w], w))
            counts = {best: 1}
        out.append(counts)
    return out


@numba.njit(cache=True)
def _sweep(docs, words, z, ndk, nkw, nk, alpha, beta, vbeta, uniforms):
    n_topics = nk.shape[0]
    p = np.empty(n_topics)
    for i in range(docs.shape[0]):
        d = docs[i]
        w = words[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(n_topics):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
            p[t] = total
        u = uniforms[i] * total
        k = 0
        while k < n_topics - 1 and p[k] <= u:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


def lda_fit(corpus: Corpus, tfidf: list[dict[str, float]] | None = None, n_topics: int = 7,
            alpha: float | None = None, beta: float = 0.01, iterations: int = 500,
            quantization: int = 10, seed: int = 0) -> LdaModel:
    if n_topics < 1:
        raise LdaError("n_topics must be >= 1")
    if not len(corpus) or not any(corpus.documents):
        raise LdaError("corpus has no tokens")
    alpha = 50.0 / n_topics if alpha is None else alpha
    tfidf = compute_tfidf(corpus) if tfidf is None else tfidf
    index = corpus.word_index
    counts = quantize(corpus, tfidf, quantization)

    docs, words = [], []
    for d, doc in enumerate(counts):
        for w in sorted(doc):
            docs.extend([d] * doc[w])
            words.extend([index[w]] * doc[w])
    docs = np.array(docs, dtype=np.int64)
    words = np.array(words, dtype=np.int64)
    n_docs, n_vocab = len(corpus), len(corpus.vocab)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, n_topics, size=docs.size).astype(np.int64)
    ndk = np.zeros((n_docs, n_topics), dtype=np.int64)
    nkw = np.zeros((n_topics, n_vocab), dtype=np.int64)
    nk = np.zeros(n_topics, dtype=np.int64)
    np.add.at(ndk, (docs, z), 1)
    np.add.at(nkw, (z, words), 1)
    np.add.at(nk, z, 1)

    if n_topics > 1:
        for _ in range(iterations):
            _sweep(docs, words, z, ndk, nkw, nk, alpha, beta, n_vocab * beta, rng.random(docs.size))

    theta = ndk + alpha
    theta = theta / theta.sum(axis=1, keepdims=True)
    phi = nkw + beta
    phi = phi / phi.sum(axis=1, keepdims=True)
    return LdaModel(n_topics, alpha, beta, list(corpus.vocab), phi, theta, seed, iterations)
