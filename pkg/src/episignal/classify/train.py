"""Stratified split, SMOTE-balanced grid search with k-fold CV, and final refit."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..topics.cte import derive_seed
from .features import LabeledTopic, TopicVectorizer
from .metrics import macro_f1
from .smote import smote
from .svm import SvmModel, fit_ovr

log = logging.getLogger(__name__)

C_GRID = (0.1, 1.0, 10.0, 100.0)
KERNELS = ("linear", "rbf")
RBF_GAMMAS = (0.01, 0.1, 1.0)


@dataclass(frozen=True)
class GridCell:
    kernel: str
    C: float
    rbf_gamma: float | None = None

    def label(self) -> str:
        g = "" if self.rbf_gamma is None else f",gamma={self.rbf_gamma:g}"
        return f"{self.kernel}(C={self.C:g}{g})"


def make_grid(C: Sequence[float] = C_GRID, kernels: Sequence[str] = KERNELS,
              rbf_gammas: Sequence[float] = RBF_GAMMAS) -> list[GridCell]:
    """Cartesian grid; the linear kernel ignores gamma so it appears once per C."""
    cells = []
    for kernel in kernels:
        if kernel == "linear":
            cells.extend(GridCell("linear", float(c)) for c in C)
        else:
            cells.extend(GridCell(kernel, float(c), float(g)) for c, g in itertools.product(C, rbf_gammas))
    return cells


class InsufficientSamples(ValueError):
    pass


def stratified_split(y, test_fraction: float, seed: int):
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        n_test = int(np.floor(test_fraction * idx.size + 0.5))
        test.extend(idx[:n_test].tolist())
        train.extend(idx[n_test:].tolist())
    return np.array(sorted(train)), np.array(sorted(test))


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold number per sample, classes dealt round-robin after a shuffle."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=int)
    offset = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        fold_of[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return fold_of


@dataclass
class TrainResult:
    model: SvmModel
    best: GridCell
    cv_scores: dict[GridCell, float]
    X_test: np.ndarray
    y_test: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray
    manifest: dict = field(default_factory=dict)


def _kernel_from_parts(cell: GridCell, gram: np.ndarray, sq: np.ndarray) -> np.ndarray:
    if cell.kernel == "linear":
        return gram
    return np.exp(-cell.rbf_gamma * sq)


def _parts(A, B):
    gram = A @ B.T
    sq = np.maximum((A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * gram, 0.0)
    return gram, sq


def grid_search(X, y, grid: Sequence[GridCell], folds: int = 10, k_neighbors: int = 5,
                seed: int = 0) -> dict[GridCell, float]:
    """Mean macro-F1 per cell over stratified folds; SMOTE runs inside each fold."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    labels = tuple(int(c) for c in np.unique(y))
    fold_of = stratified_folds(y, folds, derive_seed(seed, "folds"))
    scores = {cell: [] for cell in grid}
    for f in range(folds):
        tr, va = np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)
        Xb, yb = smote(X[tr], y[tr], k_neighbors, seed=derive_seed(seed, "smote-fold", f))
        gram_tt, sq_tt = _parts(Xb, Xb)
        gram_vt, sq_vt = _parts(X[va], Xb)
        for cell in grid:
            model = fit_ovr(Xb, yb, cell.kernel, cell.C, cell.rbf_gamma or 0.0,
                            K=_kernel_from_parts(cell, gram_tt, sq_tt))
            Kv = _kernel_from_parts(cell, gram_vt, sq_vt)
            dec = np.column_stack([m.decision_from_kernel(Kv) for m in model.machines])
            pred = model.classes[np.argmax(dec, axis=1)]
            scores[cell].append(macro_f1(y[va], pred, labels))
    return {cell: float(np.mean(v)) for cell, v in scores.items()}


def train_svm(X, y, grid: Sequence[GridCell] | None = None, folds: int = 10,
              test_fraction: float = 0.2, k_neighbors: int = 5, seed: int = 0) -> TrainResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    grid = list(grid or make_grid())
    tr, te = stratified_split(y, test_fraction, derive_seed(seed, "split"))
    classes, counts = np.unique(y[tr], return_counts=True)
    short = [int(c) for c, n in zip(classes, counts) if n < folds]
    if short:
        raise InsufficientSamples(
            f"classes {short} have fewer than {folds} training samples for {folds}-fold CV")

    cv = grid_search(X[tr], y[tr], grid, folds, k_neighbors, seed)
    # first cell wins ties, so grid order is the tie-break
    best = max(grid, key=lambda c: (cv[c], -grid.index(c)))
    Xb, yb = smote(X[tr], y[tr], k_neighbors, seed=derive_seed(seed, "smote-final"))
    model = fit_ovr(Xb, yb, best.kernel, best.C, best.rbf_gamma or 0.0)
    manifest = {
        "grid": [c.label() for c in grid], "folds": folds, "test_fraction": test_fraction,
        "k_neighbors": k_neighbors, "seed": seed, "best": best.label(),
        "cv_macro_f1": {c.label(): cv[c] for c in grid},
        "n_train": int(tr.size), "n_train_balanced": int(yb.size), "n_test": int(te.size),
    }
    model.manifest = manifest
    log.info("best cell %s with CV macro-F1 %.3f", best.label(), cv[best])
    return TrainResult(model, best, cv, X[te], y[te], tr, te, manifest)


def predict(model: SvmModel, vectorizer: TopicVectorizer, topic: LabeledTopic | tuple) -> int:
    """Category for one topic given as a LabeledTopic or ``(words, country)``."""
    words, country = (topic.top_words, topic.country) if isinstance(topic, LabeledTopic) else topic
    x = vectorizer.transform_one(words, country)
    return int(model.predict(x[None, :])[0])

