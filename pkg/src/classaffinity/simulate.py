"""Draw synthetic texts from the affinity model, for demos and checks."""

from __future__ import annotations

import numpy as np

from .corpus import Document, Vocabulary

__all__ = ["dirichlet_references", "sample_counts", "sample_document", "synthetic_vocabulary"]


def synthetic_vocabulary(V: int) -> Vocabulary:
    width = len(str(V - 1))
    return Vocabulary(tuple(f"w{i:0{width}d}" for i in range(V)))


def dirichlet_references(rng: np.random.Generator, K: int, V: int, concentration: float = 1.0) -> np.ndarray:
    """K x V matrix of reference distributions drawn from a symmetric Dirichlet."""
    return rng.dirichlet(np.full(V, concentration), size=K)


def sample_counts(rng: np.random.Generator, P: np.ndarray, theta, n: int) -> np.ndarray:
    """Counts of an n-token text; each token's class is drawn from ``theta``."""
    mix = np.asarray(theta) @ P
    return rng.multinomial(n, mix / mix.sum()).astype(float)


def sample_document(
    rng: np.random.Generator,
    P: np.ndarray,
    theta,
    n_sentences: int,
    sentence_length: int,
    vocab: Vocabulary,
    doc_id: str = "doc",
    repeat: int = 1,
) -> Document:
    """Text of independent sentences.

    ``repeat > 1`` writes each sentence's tokens that many times within the
    sentence, a dependence the token-level model ignores but sentence
    resampling preserves.
    """
    mix = np.asarray(theta) @ P
    mix = mix / mix.sum()
    words = np.array(vocab.types)
    sentences = []
    for _ in range(n_sentences):
        sent = tuple(words[rng.choice(len(words), size=sentence_length, p=mix)])
        sentences.append(sent * repeat)
    return Document(doc_id, tuple(sentences))
