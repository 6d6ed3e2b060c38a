"""Tokenization, vocabulary construction and token counting.

Documents keep their sentence structure because sentences are the resampling
unit of the block bootstrap; everything downstream of :func:`count_tokens`
only sees bags of words.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Document",
    "Vocabulary",
    "CountVector",
    "TokenizerOptions",
    "tokenize",
    "build_vocabulary",
    "count_tokens",
    "count_matrix",
    "load_stopwords",
    "default_stopwords",
    "read_jsonl",
]

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")
# strip anything that is not a letter or digit from both ends of a token
_EDGE = re.compile(r"^[\W_]+|[\W_]+$", re.UNICODE)


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be nonempty")
        sentences = tuple(tuple(s) for s in self.sentences)
        if not sentences:
            sentences = ((),)
        for sent in sentences:
            for tok in sent:
                if not tok:
                    raise ValueError(f"empty token in document {self.id!r}")
        object.__setattr__(self, "sentences", sentences)

    @property
    def tokens(self) -> list[str]:
        return [tok for sent in self.sentences for tok in sent]

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class Vocabulary:
    types: tuple[str, ...]
    index: Mapping[str, int] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        types = tuple(self.types)
        if len(set(types)) != len(types):
            raise ValueError("vocabulary contains duplicate types")
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "index", {t: i for i, t in enumerate(types)})

    def __len__(self) -> int:
        return len(self.types)

    def __contains__(self, word) -> bool:
        return word in self.index

    def __iter__(self):
        return iter(self.types)


@dataclass(frozen=True)
class CountVector:
    """Sparse in-vocabulary token counts of one document."""

    doc_id: str
    counts: Mapping[int, int]
    total: int

    def __post_init__(self):
        if any(c <= 0 for c in self.counts.values()):
            raise ValueError("stored counts must be positive")
        if sum(self.counts.values()) != self.total:
            raise ValueError("total does not match the sum of counts")

    def to_array(self, size: int) -> np.ndarray:
        x = np.zeros(size)
        for v, c in self.counts.items():
            x[v] = c
        return x

    @classmethod
    def from_array(cls, x, doc_id: str = "x") -> "CountVector":
        x = np.asarray(x)
        if np.any(x < 0) or np.any(x != np.round(x)):
            raise ValueError("counts must be nonnegative integers")
        counts = {int(v): int(x[v]) for v in np.flatnonzero(x)}
        return cls(doc_id, counts, sum(counts.values()))


@dataclass(frozen=True)
class TokenizerOptions:
    lowercase: bool = True
    # tokens (after lowercasing and stripping) that never end a sentence, e.g. "mr"
    abbreviations: frozenset = frozenset()
    # sentences shorter than this are merged into their predecessor; 0 disables
    min_sentence_length: int = 0


def _clean(tok: str, lowercase: bool) -> str:
    if lowercase:
        tok = tok.lower()
    return _EDGE.sub("", tok)


def _split(raw_text: str, options: TokenizerOptions | None) -> list[list[str]]:
    """Split text into sentences of cleaned tokens.

    Sentences end at ``.``, ``!`` or ``?`` followed by whitespace. Tokens are
    whitespace-separated, lowercased, and stripped of leading and trailing
    punctuation; internal apostrophes and hyphens are kept.
    """
    opts = options or TokenizerOptions()
    pieces = _SENTENCE_BREAK.split(raw_text.strip()) if raw_text.strip() else []
    sentences: list[list[str]] = []
    carry: list[str] = []
    for piece in pieces:
        toks = [t for t in (_clean(w, opts.lowercase) for w in piece.split()) if t]
        carry.extend(toks)
        if carry and opts.abbreviations and piece.split():
            last = _clean(piece.split()[-1], True)
            if last in opts.abbreviations:
                continue
        if carry:
            sentences.append(carry)
        carry = []
    if carry:
        sentences.append(carry)
    if opts.min_sentence_length > 0 and len(sentences) > 1:
        merged: list[list[str]] = []
        for sent in sentences:
            if merged and len(sent) < opts.min_sentence_length:
                merged[-1].extend(sent)
            else:
                merged.append(sent)
        if len(merged) > 1 and len(merged[0]) < opts.min_sentence_length:
            merged[1] = merged[0] + merged[1]
            merged.pop(0)
        sentences = merged
    return sentences or [[]]


def tokenize(raw_text: str, options: TokenizerOptions | None = None, doc_id: str = "doc") -> Document:
    return Document(doc_id, tuple(tuple(s) for s in _split(raw_text, options)))


def build_vocabulary(
    reference_docs: Iterable[Document],
    min_count: int = 2,
    stopwords: Iterable[str] = (),
) -> Vocabulary:
    """Word types occurring at least ``min_count`` times, minus stop words, sorted."""
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    stop = set(stopwords)
    totals: Counter = Counter()
    for doc in reference_docs:
        totals.update(doc.tokens)
    types = sorted(t for t, c in totals.items() if c >= min_count and t not in stop)
    if not types:
        raise ValueError("no word type survives the vocabulary filters")
    return Vocabulary(tuple(types))


def count_tokens(doc: Document, vocab: Vocabulary) -> CountVector:
    index = vocab.index
    counts = Counter(index[t] for t in doc.tokens if t in index)
    return CountVector(doc.id, dict(sorted(counts.items())), sum(counts.values()))


def count_matrix(counts: Sequence[CountVector], vocab: Vocabulary) -> np.ndarray:
    """Dense documents-by-vocabulary count matrix."""
    X = np.zeros((len(counts), len(vocab)))
    for i, cv in enumerate(counts):
        for v, c in cv.counts.items():
            X[i, v] = c
    return X


def load_stopwords(path: str | Path) -> frozenset:
    """Read a stop list: one type per line, ``#`` starts a comment."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return frozenset(words)


def default_stopwords() -> frozenset:
    with resources.as_file(resources.files("classaffinity") / "data" / "snowball_english.txt") as p:
        return load_stopwords(p)


def read_jsonl(path: str | Path, options: TokenizerOptions | None = None) -> tuple[list[Document], list[dict]]:
    """Load a corpus file.

    Each line holds an object with ``id`` and either ``text`` (tokenized here)
    or ``sentences`` (lists of tokens, used as given). Returns the documents
    and the raw records, so callers can read extra fields such as ``class``.
    """
    docs, records = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "id" not in rec:
                raise ValueError(f"{path}:{lineno}: missing 'id'")
            doc_id = str(rec["id"])
            if "sentences" in rec:
                doc = Document(doc_id, tuple(tuple(s) for s in rec["sentences"]))
            elif "text" in rec:
                doc = tokenize(rec["text"], options, doc_id)
            else:
                raise ValueError(f"{path}:{lineno}: need 'text' or 'sentences'")
            docs.append(doc)
            records.append(rec)
    return docs, records
