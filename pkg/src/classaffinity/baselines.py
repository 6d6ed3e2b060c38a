"""Comparator scalers for two reference classes.

All of them read the same smoothed reference rows as the affinity estimator,
so differences between methods come from the scaling rule alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .affinity import _counts, _probs
from .corpus import Vocabulary

__all__ = [
    "DictionaryScorer",
    "naive_bayes_logodds",
    "dictionary_score",
    "wordscore_vector",
    "wordscore_text",
    "maxmargin_score",
]


def _two_class(model) -> np.ndarray:
    P = _probs(model)
    if P.shape[0] != 2:
        raise ValueError("this scaler needs exactly two reference classes")
    return P


@dataclass(frozen=True)
class DictionaryScorer:
    """Word orientations; the simple form uses +1 and -1 lists."""

    scores: Mapping[str, float]

    def __post_init__(self):
        for w, s in self.scores.items():
            if not -1.0 <= s <= 1.0:
                raise ValueError(f"score for {w!r} outside [-1, 1]")

    @classmethod
    def from_lists(cls, positive: Iterable[str], negative: Iterable[str]) -> "DictionaryScorer":
        pos, neg = set(positive), set(negative)
        overlap = pos & neg
        if overlap:
            raise ValueError(f"polar lists overlap: {sorted(overlap)[:5]}")
        scores = {w: 1.0 for w in pos}
        scores.update({w: -1.0 for w in neg})
        return cls(scores)

    def vector(self, vocab: Vocabulary) -> np.ndarray:
        return np.array([self.scores.get(w, 0.0) for w in vocab.types])


def naive_bayes_logodds(model, x) -> float:
    """Log-odds of class 1 over class 2 under equal priors: ``sum_v x_v log(p1v/p2v)``."""
    P = _two_class(model)
    xa = _counts(x, P.shape[1])
    return float(xa @ (np.log(P[0]) - np.log(P[1])))


def dictionary_score(scorer: DictionaryScorer | np.ndarray, x, vocab: Vocabulary | None = None) -> float:
    """Average orientation of the document's tokens."""
    s = scorer.vector(vocab) if isinstance(scorer, DictionaryScorer) else np.asarray(scorer, dtype=float)
    xa = _counts(x, s.shape[0])
    n = xa.sum()
    if n <= 0:
        raise ValueError("empty document")
    return float(xa @ s / n)


def wordscore_vector(model) -> np.ndarray:
    P = _two_class(model)
    return (P[1] - P[0]) / (P[0] + P[1])


def wordscore_text(model, x) -> tuple[float, float]:
    """Raw wordscore and its rescaled version ``raw / t2``.

    ``t2`` is the raw score of an average class-2 text, so average reference
    texts land at -1 and +1. The rescaled value is NaN when ``t2 == 0``.
    """
    P = _two_class(model)
    s = wordscore_vector(P)
    xa = _counts(x, P.shape[1])
    n = xa.sum()
    if n <= 0:
        raise ValueError("empty document")
    raw = float(xa @ s / n)
    t1, t2 = float(s @ P[0]), float(s @ P[1])
    if abs(t1 + t2) > 1e-12 * max(1.0, abs(t2)):
        raise ArithmeticError(f"reference scores are not antisymmetric: t1={t1}, t2={t2}")
    rescaled = raw / t2 if t2 != 0 else float("nan")
    return raw, rescaled


def maxmargin_score(model, x) -> float:
    """Separable-case max-margin predictor ``(p2 - p1) . (x/n - (p1 + p2)/2)``."""
    P = _two_class(model)
    xa = _counts(x, P.shape[1])
    n = xa.sum()
    if n <= 0:
        raise ValueError("empty document")
    w = P[1] - P[0]
    return float(w @ xa / n - 0.5 * w @ (P[0] + P[1]))
