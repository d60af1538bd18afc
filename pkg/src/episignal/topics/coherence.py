from __future__ import annotations

import logging
import math
from typing import Sequence

from .corpus import Corpus

log = logging.getLogger(__name__)


def _doc_sets(corpus: Corpus | Sequence[Sequence[str]]) -> list[set[str]]:
    docs = corpus.documents if isinstance(corpus, Corpus) else corpus
    return [set(d) for d in docs]


def umass(words: Sequence[str], doc_sets: list[set[str]]) -> float | None:
    """UMass coherence of one ranked word list, or None with < 2 known words.

    Mean over pairs i < j of ``ln((D(w_i, w_j) + 1) / D(w_j))``.
    """
    df = {}
    known = []
    for w in words:
        if w in df:
            continue
        c = sum(1 for s in doc_sets if w in s)
        if c:
            df[w] = c
            known.append(w)
    if len(known) < 2:
        return None
    terms = []
    for i in range(len(known)):
        for j in range(i + 1, len(known)):
            wi, wj = known[i], known[j]
            co = sum(1 for s in doc_sets if wi in s and wj in s)
            terms.append(math.log((co + 1) / df[wj]))
    return sum(terms) / len(terms)


def per_topic_coherence(topics: Sequence[Sequence[str]], corpus) -> list[float | None]:
    sets = _doc_sets(corpus)
    return [umass(t, sets) for t in topics]


def coherence(topics: Sequence[Sequence[str]], corpus) -> float:
    """Average UMass coherence over topics with at least two in-vocabulary words."""
    scores = per_topic_coherence(topics, corpus)
    valid = [s for s in scores if s is not None]
    if len(valid) < len(scores):
        log.debug("coherence: skipped %d topic(s) with < 2 known words", len(scores) - len(valid))
    return sum(valid) / len(valid) if valid else float("nan")
