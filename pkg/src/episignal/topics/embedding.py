"""Sentence-embedding providers: precomputed vectors or a hashed n-gram fallback."""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class EmbeddingError(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class HashedNgramEmbedder:
    """Mean of hashed unigram/bigram indicator vectors, L2-normalized."""

    mode = "hashed-ngram"

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed

    def _bucket(self, gram: str) -> int:
        h = hashlib.blake2b(f"{self.seed}\x1f{gram}".encode("utf-8"), digest_size=8)
        return int.from_bytes(h.digest(), "little") % self.dim

    def embed(self, tweet_id: str, tokens: Sequence[str]) -> np.ndarray:
        grams = list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        vec = np.zeros(self.dim)
        if not grams:
            return vec
        for g in grams:
            vec[self._bucket(g)] += 1.0
        vec /= len(grams)
        return vec / np.linalg.norm(vec)


class PrecomputedEmbeddings:
    """Vectors keyed by tweet id, as read from an embedding file."""

    mode = "precomputed-file"

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int):
        self.dim = dim
        self.vectors = {}
        for tid, v in vectors.items():
            v = np.asarray(v, dtype=float)
            if v.shape != (dim,) or not np.all(np.isfinite(v)):
                raise ValueError(f"embedding for {tid} is not a finite vector of length {dim}")
            self.vectors[tid] = v

    @classmethod
    def from_file(cls, path: str | Path) -> "PrecomputedEmbeddings":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("dim="):
                raise ValueError(f"{path}: expected 'dim=<D>' header, got {header!r}")
            dim = int(header[4:])
            vectors = {}
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                tid, *vals = line.split(",")
                if len(vals) != dim:
                    raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(vals)}")
                vectors[tid.strip()] = np.array([float(v) for v in vals])
        return cls(vectors, dim)

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"dim={self.dim}\n")
            for tid in sorted(self.vectors):
                fh.write(tid + "," + ",".join(repr(float(x)) for x in self.vectors[tid]) + "\n")

    def embed(self, tweet_id: str, tokens: Sequence[str]) -> np.ndarray:
        try:
            return self.vectors[tweet_id].copy()
        except KeyError:
            raise EmbeddingError(f"no precomputed embedding for tweet_id {tweet_id}") from None


def embed(provider, tweet_id: str, tokens: Sequence[str]) -> np.ndarray:
    return provider.embed(tweet_id, tokens)


def embed_many(provider, ids: Sequence[str], docs: Sequence[Sequence[str]]) -> np.ndarray:
    missing = [tid for tid in ids
               if isinstance(provider, PrecomputedEmbeddings) and tid not in provider.vectors]
    if missing:
        raise EmbeddingError(f"no precomputed embedding for tweet_id(s): {', '.join(missing)}")
    return np.array([provider.embed(t, d) for t, d in zip(ids, docs)]).reshape(len(ids), provider.dim)
