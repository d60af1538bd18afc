from __future__ import annotations

import numpy as np


class SmoteError(ValueError):
    pass


def smote(X, y, k_neighbors: int = 5, seed: int = 0, return_parents: bool = False):
    """Oversample every class up to the majority count.

    Originals are kept verbatim and first; synthetic rows follow, class by
    class in sorted order. Each synthetic row is ``x + u * (x_nn - x)`` for a
    random same-class sample ``x`` and one of its ``k`` nearest neighbours.
    With ``return_parents`` an ``(m, 3)`` array of (base index, neighbour
    index, u) is returned as well.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    for c, n in zip(classes, counts):
        if n < 2:
            raise SmoteError(f"class {c} has a single sample; SMOTE needs at least 2")
    target = counts.max()
    rng = np.random.default_rng(seed)
    new_X, new_y, parents = [], [], []
    for c, n in zip(classes, counts):
        need = int(target - n)
        if need == 0:
            continue
        idx = np.flatnonzero(y == c)
        pts = X[idx]
        k = min(k_neighbors, n - 1)
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for _ in range(need):
            i = int(rng.integers(n))
            j = int(nn[i, rng.integers(k)])
            u = rng.random()
            new_X.append(pts[i] + u * (pts[j] - pts[i]))
            new_y.append(c)
            parents.append((idx[i], idx[j], u))
    if new_X:
        X_out = np.vstack([X, np.array(new_X)])
        y_out = np.concatenate([y, np.array(new_y, dtype=y.dtype)])
    else:
        X_out, y_out = X.copy(), y.copy()
    if return_parents:
        return X_out, y_out, np.array(parents, dtype=float).reshape(-1, 3)
    return X_out, y_out
