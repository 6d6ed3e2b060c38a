"""Sentence-level block bootstrap for affinity standard errors.

Each replicate resamples the sentences of every reference text, re-estimates
the reference distributions with the same smoothing, resamples the sentences
of the target text, and refits. The vocabulary stays fixed throughout.

Random streams are keyed by ``(seed, replicate)`` for the references and by
``(seed, replicate, document id)`` for the targets, so results do not depend
on execution order, thread count, or which other documents are scaled in the
same call.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .affinity import DEFAULT_LAMBDA, estimate_affinity
from .corpus import Document, Vocabulary, count_tokens
from .reference import DEFAULT_ALPHA, estimate_reference, reference_from_counts

__all__ = ["BootstrapResult", "resample_document", "bootstrap_affinity", "bootstrap_corpus"]

DEFAULT_B = 100


@dataclass(eq=False)
class BootstrapResult:
    doc_id: str
    class_labels: tuple[str, ...]
    theta_hat: np.ndarray
    replicates: np.ndarray  # B x K, NaN rows for failed replicates
    se_theta: np.ndarray
    wald_se_theta: np.ndarray
    ratio: np.ndarray
    seed: int
    b: int
    n_converged: int


def _draw(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.integers(0, m, size=m)


def resample_document(doc: Document, rng: np.random.Generator) -> Document:
    """Same number of sentences, drawn uniformly with replacement."""
    m = len(doc.sentences)
    if m == 0:
        raise ValueError("document has no sentences")
    idx = _draw(rng, m)
    return Document(doc.id, tuple(doc.sentences[i] for i in idx))


def _sentence_matrix(doc: Document, vocab: Vocabulary) -> sp.csr_matrix:
    index = vocab.index
    rows, cols = [], []
    for i, sent in enumerate(doc.sentences):
        for tok in sent:
            v = index.get(tok)
            if v is not None:
                rows.append(i)
                cols.append(v)
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(len(doc.sentences), len(vocab)))


def _resampled_counts(S: sp.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    m = S.shape[0]
    weights = np.bincount(_draw(rng, m), minlength=m).astype(float)
    return np.asarray(S.T @ weights).ravel()


def _doc_key(doc_id: str) -> int:
    return zlib.crc32(doc_id.encode("utf-8"))


def _shifted_sd(draws: np.ndarray) -> np.ndarray:
    # shifting by the first draw keeps identical replicates at exactly zero spread
    if draws.shape[0] < 2:
        return np.full(draws.shape[1], np.nan)
    return np.std(draws - draws[0], axis=0, ddof=1)


def bootstrap_corpus(
    reference_docs: Mapping[str, Sequence[Document]],
    docs: Sequence[Document],
    vocab: Vocabulary,
    alpha: float = DEFAULT_ALPHA,
    lam: float = DEFAULT_LAMBDA,
    b: int = DEFAULT_B,
    seed: int = 0,
    n_jobs: int = 1,
) -> list[BootstrapResult]:
    """Bootstrap standard errors for several target documents at once.

    Within a replicate all targets share the same resampled references.
    """
    if b < 2:
        raise ValueError("need at least two bootstrap replicates")
    labels = tuple(reference_docs)
    groups = {k: [count_tokens(d, vocab) for d in reference_docs[k]] for k in labels}
    model = estimate_reference(groups, vocab, alpha)
    ref_mats = [[_sentence_matrix(d, vocab) for d in reference_docs[k]] for k in labels]
    doc_mats = [_sentence_matrix(d, vocab) for d in docs]
    keys = [_doc_key(d.id) for d in docs]
    K = len(labels)

    fits = [estimate_affinity(model, count_tokens(d, vocab), lam=lam) for d in docs]

    def replicate(r: int) -> np.ndarray:
        ref_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r, 0)))
        pooled = np.zeros((K, len(vocab)))
        for k, mats in enumerate(ref_mats):
            for S in mats:
                pooled[k] += _resampled_counts(S, ref_rng)
        P = reference_from_counts(pooled, alpha)
        out = np.full((len(docs), K), np.nan)
        for i, S in enumerate(doc_mats):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r, 1, keys[i])))
            x = _resampled_counts(S, rng)
            try:
                fit = estimate_affinity(P, x, lam=lam)
            except (ValueError, ArithmeticError):
                continue
            if fit.converged:
                out[i] = fit.theta
        return out

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            draws = list(pool.map(replicate, range(b)))
    else:
        draws = [replicate(r) for r in range(b)]
    draws = np.stack(draws, axis=1)  # docs x B x K

    results = []
    for i, doc in enumerate(docs):
        reps = draws[i]
        ok = ~np.isnan(reps).any(axis=1)
        se = _shifted_sd(reps[ok])
        wald = fits[i].wald_se_theta
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = se / wald
        results.append(
            BootstrapResult(
                doc_id=doc.id,
                class_labels=labels,
                theta_hat=fits[i].theta,
                replicates=reps,
                se_theta=se,
                wald_se_theta=wald,
                ratio=ratio,
                seed=seed,
                b=b,
                n_converged=int(ok.sum()),
            )
        )
    return results


def bootstrap_affinity(
    reference_docs: Mapping[str, Sequence[Document]],
    doc: Document,
    vocab: Vocabulary,
    alpha: float = DEFAULT_ALPHA,
    lam: float = DEFAULT_LAMBDA,
    b: int = DEFAULT_B,
    seed: int = 0,
    n_jobs: int = 1,
) -> BootstrapResult:
    return bootstrap_corpus(reference_docs, [doc], vocab, alpha, lam, b, seed, n_jobs)[0]
