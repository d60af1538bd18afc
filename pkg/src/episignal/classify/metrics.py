from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class ClassMetrics:
    label: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    per_class: list[ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    support: int
    flags: list[str] = field(default_factory=list)

    def rows(self):
        for m in self.per_class:
            yield str(m.label), m.precision, m.recall, m.f1, m.support
        yield "macro_avg", self.macro_precision, self.macro_recall, self.macro_f1, self.support


def _f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def evaluate(y_true: Sequence[int], y_pred: Sequence[int],
             labels: Sequence[int] = tuple(range(1, 8))) -> ClassificationReport:
    """Per-class precision/recall/F1 and their unweighted mean over ``labels``.

    A class never predicted gets precision 0; a class absent from the truth
    gets recall 0. Both are flagged.
    """
    yt = np.asarray(y_true)
    yp = np.asarray(y_pred)
    if yt.size == 0:
        raise ValueError("empty test set")
    if yt.shape != yp.shape:
        raise ValueError("y_true and y_pred differ in length")
    per, flags = [], []
    for c in labels:
        tp = int(np.sum((yt == c) & (yp == c)))
        n_pred = int(np.sum(yp == c))
        n_true = int(np.sum(yt == c))
        if n_pred == 0:
            flags.append(f"class {c}: no predictions, precision set to 0")
        if n_true == 0:
            flags.append(f"class {c}: absent from truth, recall set to 0")
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_true if n_true else 0.0
        per.append(ClassMetrics(int(c), p, r, _f1(p, r), n_true))
    k = len(per)
    return ClassificationReport(
        per_class=per,
        macro_precision=sum(m.precision for m in per) / k,
        macro_recall=sum(m.recall for m in per) / k,
        macro_f1=sum(m.f1 for m in per) / k,
        accuracy=float(np.mean(yt == yp)),
        support=int(yt.size),
        flags=flags,
    )


def macro_f1(y_true, y_pred, labels) -> float:
    return evaluate(y_true, y_pred, labels).macro_f1
