"""k-means, silhouette and a PCA projection for inspection plots."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ClusterError(ValueError):
    pass


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    sse_history: list[float] = field(default_factory=list)


def _sq_dists(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(X: np.ndarray, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            nxt = int(rng.integers(n))
        else:
            nxt = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            nxt = min(nxt, n - 1)
        idx.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[idx].copy()


def kmeans(vectors, k: int, seed: int = 0, max_iters: int = 300, tol: float = 1e-6) -> KMeansResult:
    """Lloyd iterations from a k-means++ start; empty clusters keep their centroid."""
    X = np.asarray(vectors, dtype=float)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ClusterError(f"k={k} must be between 1 and the number of vectors ({n})")
    rng = np.random.default_rng(seed)
    C = kmeans_pp_init(X, k, rng)
    history = []
    it = 0
    for it in range(1, max_iters + 1):
        d2 = _sq_dists(X, C)
        labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), labels].sum()))
        new = C.copy()
        for j in range(k):
            members = X[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
        shift = float(np.sqrt(((new - C) ** 2).sum(axis=1)).max())
        C = new
        if shift < tol:
            break
    d2 = _sq_dists(X, C)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    history.append(inertia)
    return KMeansResult(labels, C, inertia, it, history)


def silhouette(vectors, assignments) -> float:
    """Mean silhouette with Euclidean distance; singleton members score 0."""
    X = np.asarray(vectors, dtype=float)
    labels = np.asarray(assignments)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ClusterError("silhouette undefined for a single cluster")
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(X.shape[0])
    masks = {c: labels == c for c in clusters}
    for i in range(X.shape[0]):
        own = masks[labels[i]]
        size = own.sum()
        if size == 1:
            continue
        a = D[i, own].sum() / (size - 1)
        b = min(D[i, masks[c]].mean() for c in clusters if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def project_2d(vectors) -> np.ndarray:
    """Scores on the top two principal components.

    Each component is signed so its largest-magnitude loading is positive.
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ClusterError("projection needs at least 2 vectors")
    Xc = X - X.mean(axis=0)
    out = np.zeros((X.shape[0], 2))
    if not np.any(Xc):
        return out
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    for j in range(min(2, vt.shape[0])):
        if s[j] <= s[0] * 1e-12:
            break
        comp = vt[j]
        if comp[np.argmax(np.abs(comp))] < 0:
            comp = -comp
        out[:, j] = Xc @ comp
    return out
