"""Lidstone-smoothed reference distributions, one row per class."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import CountVector, Vocabulary

__all__ = ["ReferenceModel", "estimate_reference", "reference_from_counts", "save_model", "load_model"]

DEFAULT_ALPHA = 0.5


@dataclass(frozen=True, eq=False)
class ReferenceModel:
    vocab: Vocabulary
    class_labels: tuple[str, ...]
    probs: np.ndarray  # K x V, rows sum to one
    alpha: float
    token_totals: tuple[int, ...] = ()

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if probs.ndim != 2 or probs.shape[0] != len(self.class_labels):
            raise ValueError("probs must have one row per class label")
        if probs.shape[0] < 2:
            raise ValueError("need at least two classes")
        if probs.shape[1] != len(self.vocab):
            raise ValueError("probs width does not match the vocabulary")

    @property
    def n_classes(self) -> int:
        return self.probs.shape[0]

    @property
    def n_types(self) -> int:
        return self.probs.shape[1]


def reference_from_counts(class_counts: np.ndarray, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Smoothed probability rows from pooled per-class count rows (K x V)."""
    class_counts = np.asarray(class_counts, dtype=float)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    V = class_counts.shape[1]
    num = class_counts + alpha
    den = V * alpha + class_counts.sum(axis=1, keepdims=True)
    if np.any(den <= 0):
        raise ValueError("a class has no in-vocabulary tokens and alpha is zero")
    return num / den


def estimate_reference(
    groups: Mapping[str, Sequence[CountVector]],
    vocab: Vocabulary,
    alpha: float = DEFAULT_ALPHA,
) -> ReferenceModel:
    """Pool each class's reference texts and apply add-``alpha`` smoothing.

    Class order follows the mapping's iteration order.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    labels = list(groups)
    pooled = np.zeros((len(labels), len(vocab)))
    for k, label in enumerate(labels):
        texts = groups[label]
        if not texts:
            raise ValueError(f"class {label!r} has no reference texts")
        for cv in texts:
            for v, c in cv.counts.items():
                pooled[k, v] += c
    probs = reference_from_counts(pooled, alpha)
    totals = tuple(int(t) for t in pooled.sum(axis=1))
    return ReferenceModel(vocab, tuple(labels), probs, float(alpha), totals)


def save_model(model: ReferenceModel, path: str | Path) -> None:
    # json writes floats with repr(), which round-trips binary64 exactly
    payload = {
        "class_labels": list(model.class_labels),
        "alpha": model.alpha,
        "token_totals": list(model.token_totals),
        "vocabulary": list(model.vocab.types),
        "probs": model.probs.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ReferenceModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return ReferenceModel(
        Vocabulary(tuple(payload["vocabulary"])),
        tuple(payload["class_labels"]),
        np.array(payload["probs"], dtype=float),
        float(payload["alpha"]),
        tuple(payload.get("token_totals", ())),
    )
