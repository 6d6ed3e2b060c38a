"""Word influence on fitted affinities, and the keyness screen.

The influence of a word is the change in the fitted affinities when all of
its occurrences are deleted from a text. Refitting once per word type is
expensive, so :func:`influence` approximates the refit by a single Newton
step from the current estimate, using a rank-one downdate of the information
matrix. :func:`influence_exact` does the refit and serves as its check.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.stats

from .affinity import (
    AffinityFit,
    DEFAULT_LAMBDA,
    _counts,
    _probs,
    contrast_basis,
    estimate_affinity,
    observed_information,
)
from .corpus import CountVector, Vocabulary
from .reference import ReferenceModel

__all__ = [
    "InfluenceEntry",
    "InfluenceSummary",
    "KeynessRecord",
    "influence",
    "influence_exact",
    "aggregate_influence",
    "keyness_g2",
    "G2_CRITICAL_05",
]

G2_CRITICAL_05 = float(scipy.stats.chi2.ppf(0.95, df=1))


@dataclass(frozen=True, eq=False)
class InfluenceEntry:
    doc_id: str
    word: str
    d: float
    direction: str
    x_v: int
    delta: np.ndarray  # approximate theta_hat - theta_hat_without_word
    # the rank-one downdate lost definiteness; d and delta come from an exact refit
    flagged: bool = False


@dataclass(frozen=True)
class InfluenceSummary:
    word: str
    direction: str
    n_docs: int
    median_d: float
    max_d: float


@dataclass(frozen=True)
class KeynessRecord:
    word: str
    g2: float
    direction: str | None
    significant_at_05: bool


def _labels(model, K: int) -> tuple[str, ...]:
    if isinstance(model, ReferenceModel):
        return model.class_labels
    return tuple(str(k + 1) for k in range(K))


def _word_name(model, v: int) -> str:
    if isinstance(model, ReferenceModel):
        return model.vocab.types[v]
    return str(v)


def _word_index(model, word) -> int:
    if isinstance(word, (int, np.integer)):
        return int(word)
    if isinstance(model, ReferenceModel):
        return model.vocab.index[word]
    raise TypeError("word must be an index unless the model carries a vocabulary")


def influence(model, x, fit: AffinityFit, lam: float | None = None) -> list[InfluenceEntry]:
    """Approximate deletion influence for every word present in ``x``.

    For each observed word ``v``, ``h_v = C.T @ Q[:, v]`` and ``hh = H^{-1} h_v``
    with ``H`` the penalized negative Hessian at the fit. The approximate
    change ``theta_hat - theta_hat_(v)`` is ``C @ hh / (1/x_v - hh @ h_v)``;
    ``d`` is half its 1-norm and ``direction`` the class it increases most,
    i.e. the class the word pulls the fit toward.
    """
    P = _probs(model)
    K, V = P.shape
    xa = _counts(x, V)
    lam = fit.lam if lam is None else lam
    doc_id = fit.doc_id or (x.doc_id if isinstance(x, CountVector) else "")
    labels = _labels(model, K)
    C = contrast_basis(K).contrast
    theta = fit.theta
    mu = theta @ P

    H = observed_information(P, xa, fit.beta, lam)
    idx = np.flatnonzero(xa)
    h = C.T @ (P[:, idx] / mu[idx])  # (K-1) x n_obs
    hh = scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), h)
    denom = 1.0 / xa[idx] - np.einsum("ij,ij->j", hh, h)
    entries = []
    for j, v in enumerate(idx):
        flagged = denom[j] <= 0
        if flagged:
            delta = influence_exact(P, xa, int(v), lam)
        else:
            delta = C @ hh[:, j] / denom[j]
        d = 0.5 * float(np.abs(delta).sum())
        entries.append(
            InfluenceEntry(
                doc_id=doc_id,
                word=_word_name(model, v),
                d=d,
                direction=labels[int(np.argmax(delta))],
                x_v=int(xa[v]),
                delta=delta,
                flagged=bool(flagged),
            )
        )
    return entries


def influence_exact(model, x, word, lam: float = DEFAULT_LAMBDA, **fit_kw) -> np.ndarray:
    """``theta_hat - theta_hat_(v)`` by refitting without word ``v``."""
    P = _probs(model)
    xa = _counts(x, P.shape[1]).copy()
    v = _word_index(model, word)
    if xa[v] <= 0:
        raise ValueError("word does not occur in the text")
    full = estimate_affinity(P, xa, lam=lam, **fit_kw)
    xa[v] = 0
    reduced = estimate_affinity(P, xa, lam=lam, **fit_kw)
    return full.theta - reduced.theta


def aggregate_influence(entries: Iterable[InfluenceEntry]) -> list[InfluenceSummary]:
    """Per-word count, median and maximum of the nonzero influences.

    Rows are ordered by direction, then by decreasing median, then by word.
    """
    by_word: dict[str, list[InfluenceEntry]] = defaultdict(list)
    for e in entries:
        if e.d > 0:
            by_word[e.word].append(e)
    rows = []
    for word, es in by_word.items():
        ds = np.array([e.d for e in es])
        votes = Counter(e.direction for e in es)
        top = max(votes.values())
        direction = min(lab for lab, c in votes.items() if c == top)
        rows.append(InfluenceSummary(word, direction, len(es), float(np.median(ds)), float(ds.max())))
    rows.sort(key=lambda r: (r.direction, -r.median_d, r.word))
    return rows


def _g2_table(a: float, b: float, na: float, nb: float) -> float:
    observed = np.array([[a, b], [na - a, nb - b]])
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / observed.sum()
    mask = observed > 0
    return float(2.0 * np.sum(observed[mask] * np.log(observed[mask] / expected[mask])))


def keyness_g2(
    counts_a: CountVector,
    counts_b: CountVector,
    vocab: Vocabulary,
    labels: Sequence[str] = ("a", "b"),
) -> list[KeynessRecord]:
    """2x2 log-likelihood ratio statistic for each vocabulary word.

    The table crosses (word, all other words) with (corpus a, corpus b);
    expected counts come from the margins and empty cells contribute zero.
    """
    na, nb = counts_a.total, counts_b.total
    if na < 1 or nb < 1:
        raise ValueError("both corpora need at least one token")
    xa = counts_a.to_array(len(vocab))
    xb = counts_b.to_array(len(vocab))
    out = []
    for v, word in enumerate(vocab.types):
        g2 = _g2_table(xa[v], xb[v], na, nb)
        ra, rb = xa[v] / na, xb[v] / nb
        direction = labels[0] if ra > rb else labels[1] if rb > ra else None
        out.append(KeynessRecord(word, max(g2, 0.0), direction, g2 > G2_CRITICAL_05))
    return out
