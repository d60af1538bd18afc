"""Contextual topic embedding: LDA topic mix + sentence embedding, compressed and clustered."""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autoencoder import autoencoder_fit
from .cluster import ClusterError, kmeans, silhouette
from .coherence import coherence
from .corpus import Corpus, TokenizedTweet, compute_tfidf
from .embedding import embed_many
from .lda import LdaError, lda_fit

log = logging.getLogger(__name__)

K_GRID = tuple(range(1, 16))
GAMMA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


def derive_seed(master: int, *coords) -> int:
    """Stable per-task seed so parallel and sequential runs agree."""
    key = repr((int(master),) + tuple(coords)).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") % (2 ** 32)


def cte_concat(theta, embedding, gamma: float, n_topics: int | None = None,
               dim: int | None = None) -> np.ndarray:
    """``[gamma * theta | embedding]``; works on single rows or matrices."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    theta = np.asarray(theta, dtype=float)
    embedding = np.asarray(embedding, dtype=float)
    if n_topics is not None and theta.shape[-1] != n_topics:
        raise ValueError(f"theta has {theta.shape[-1]} entries, expected {n_topics}")
    if dim is not None and embedding.shape[-1] != dim:
        raise ValueError(f"embedding has {embedding.shape[-1]} entries, expected {dim}")
    if theta.shape[:-1] != embedding.shape[:-1]:
        raise ValueError("theta and embedding disagree on the number of rows")
    return np.concatenate([gamma * theta, embedding], axis=-1)


@dataclass
class TopicCluster:
    cluster_id: int
    member_ids: tuple[str, ...]
    top_words: tuple[tuple[str, int], ...]
    day: object = None
    region: str | None = None
    category: int | None = None

    @property
    def valid(self) -> bool:
        return len(self.member_ids) > 2

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.top_words]

    def to_json(self) -> dict:
        return {"cluster_id": self.cluster_id, "members": list(self.member_ids),
                "top_words": [[w, c] for w, c in self.top_words], "valid": self.valid,
                "category": self.category}


def extract_topics(assignments: Sequence[int], tweets: Sequence[TokenizedTweet], day=None,
                   region: str | None = None, top_n: int = 10) -> list[TopicCluster]:
    if len(assignments) != len(tweets):
        raise ValueError("assignments must cover every tweet")
    members: dict[int, list[TokenizedTweet]] = {}
    for label, tw in zip(assignments, tweets):
        members.setdefault(int(label), []).append(tw)
    out = []
    for cid in sorted(members):
        counts = Counter(t for tw in members[cid] for t in tw.tokens)
        top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
        out.append(TopicCluster(cid, tuple(tw.tweet_id for tw in members[cid]), tuple(top),
                                day, region))
    return out


@dataclass
class TopicSettings:
    k_grid: Sequence[int] = K_GRID
    gamma_grid: Sequence[float] = GAMMA_GRID
    lda_iterations: int = 500
    quantization: int = 10
    alpha: float | None = None
    beta: float = 0.01
    latent_dim: int = 32
    hidden_dim: int | None = None
    epochs: int = 200
    lr: float = 1e-3
    batch_size: int = 32
    top_n: int = 10
    min_docs: int = 3


@dataclass
class CellScore:
    k: int
    gamma: float
    coherence: float | None = None
    silhouette: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class TuneResult:
    k: int
    gamma: float
    scores: list[CellScore]
    labels: np.ndarray
    latent: np.ndarray
    coherence: float
    silhouette: float


@dataclass
class _Cell:
    score: CellScore
    labels: np.ndarray | None = None
    latent: np.ndarray | None = None


def _rank_desc(values: list[float]) -> list[int]:
    """Competition ranks, 1 for the largest value."""
    return [1 + sum(1 for w in values if w > v) for v in values]


def _run_cell(corpus, tweets, theta, emb, k, gamma, settings, seed) -> _Cell:
    score = CellScore(k, gamma)
    try:
        vecs = cte_concat(theta, emb, gamma)
        ae = autoencoder_fit(vecs, latent_dim=settings.latent_dim, hidden_dim=settings.hidden_dim,
                             epochs=settings.epochs, lr=settings.lr,
                             batch_size=settings.batch_size, seed=derive_seed(seed, "ae", k, gamma))
        latent = ae.encode(vecs)
        km = kmeans(latent, k, seed=derive_seed(seed, "kmeans", k, gamma))
        topics = extract_topics(km.labels, tweets, top_n=settings.top_n)
        coh = coherence([t.words for t in topics], corpus)
        if not np.isfinite(coh):
            raise ValueError("no topic has two known words")
        score.coherence = float(coh)
        score.silhouette = silhouette(latent, km.labels)
    except (ValueError, ClusterError, LdaError) as exc:
        score.error = str(exc)
        return _Cell(score)
    return _Cell(score, km.labels, latent)


def tune_hyperparams(tweets: Sequence[TokenizedTweet], embeddings: np.ndarray,
                     settings: TopicSettings = TopicSettings(), seed: int = 0) -> TuneResult:
    """Evaluate every (k, gamma) cell and pick the best by rank sum.

    A cell's rank sum is its coherence rank plus its silhouette rank (both
    descending); ties go to the smaller k, then the smaller gamma.
    """
    corpus = Corpus.from_tokens(tweets)
    tfidf = compute_tfidf(corpus)
    emb = np.asarray(embeddings, dtype=float)
    cells: list[_Cell] = []
    for k in settings.k_grid:
        try:
            lda = lda_fit(corpus, tfidf, n_topics=k, alpha=settings.alpha, beta=settings.beta,
                          iterations=settings.lda_iterations, quantization=settings.quantization,
                          seed=derive_seed(seed, "lda", k))
        except LdaError as exc:
            cells.extend(_Cell(CellScore(k, g, error=str(exc))) for g in settings.gamma_grid)
            continue
        for gamma in settings.gamma_grid:
            cells.append(_run_cell(corpus, tweets, lda.doc_topic, emb, k, gamma, settings, seed))

    good = [c for c in cells if c.score.ok]
    if not good:
        errors = "; ".join(f"k={c.score.k},g={c.score.gamma}: {c.score.error}" for c in cells[:3])
        raise ValueError(f"no grid cell could be evaluated ({errors})")
    coh_rank = _rank_desc([c.score.coherence for c in good])
    sil_rank = _rank_desc([c.score.silhouette for c in good])
    best_i = min(range(len(good)),
                 key=lambda i: (coh_rank[i] + sil_rank[i], good[i].score.k, good[i].score.gamma))
    best = good[best_i]
    return TuneResult(best.score.k, best.score.gamma, [c.score for c in cells], best.labels,
                      best.latent, best.score.coherence, best.score.silhouette)


@dataclass
class DayTopics:
    day: object
    region: str
    clusters: list[TopicCluster]
    k: int | None
    gamma: float | None
    coherence: float | None = None
    silhouette: float | None = None
    scores: list[CellScore] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
    note: str | None = None

    def to_json(self) -> dict:
        return {
            "region": self.region, "day": str(self.day), "k": self.k, "gamma": self.gamma,
            "coherence": self.coherence, "silhouette": self.silhouette,
            "clusters": [c.to_json() for c in self.clusters],
            "grid": [{"k": s.k, "gamma": s.gamma, "coherence": s.coherence,
                      "silhouette": s.silhouette, "error": s.error} for s in self.scores],
            "dropped": list(self.dropped), "note": self.note,
        }


def model_day(tweets: Sequence[TokenizedTweet], provider, day, region: str,
              settings: TopicSettings = TopicSettings(), seed: int = 0) -> DayTopics:
    """Extract the topics of one (region, day) slice of tokenized tweets."""
    kept = [t for t in tweets if t.tokens]
    dropped = [t.tweet_id for t in tweets if not t.tokens]
    if len(kept) < settings.min_docs:
        return DayTopics(day, region, [], None, None, dropped=dropped,
                         note=f"fewer than {settings.min_docs} non-empty tweets")
    cell_seed = derive_seed(seed, region, str(day))
    emb = embed_many(provider, [t.tweet_id for t in kept], [t.tokens for t in kept])
    try:
        res = tune_hyperparams(kept, emb, settings, seed=cell_seed)
    except ValueError as exc:
        log.info("%s %s: tuning failed (%s); single cluster", region, day, exc)
        clusters = extract_topics([0] * len(kept), kept, day, region, settings.top_n)
        return DayTopics(day, region, clusters, 1, None, dropped=dropped, note=str(exc))
    clusters = extract_topics(res.labels, kept, day, region, settings.top_n)
    return DayTopics(day, region, clusters, res.k, res.gamma, res.coherence, res.silhouette,
                     res.scores, dropped)
