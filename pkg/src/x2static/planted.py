"""Planted ground-truth spaces and synthetic corpora.

A planted space is a synthetic "true" embedding matrix used as a desk-scale
oracle: the mock teacher emits (noisy copies of) its rows, and recovery
quality is measured against cosine similarities computed in the same space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import TokenizedCorpus


@dataclass
class PlantedSpace:
    """Unit-norm true vectors, row i belonging to vocabulary id i."""

    vectors: np.ndarray
    seed: int

    def __post_init__(self):
        norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise ValueError("planted rows must be unit-norm within 1e-6")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


def make_planted_space(n_words: int, dim: int, seed: int) -> PlantedSpace:
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n_words, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return PlantedSpace(vectors=rows.astype(np.float32), seed=seed)


def synthetic_words(n_words: int) -> list[str]:
    return [f"w{i:05d}" for i in range(n_words)]


def zipf_weights(n_words: int, exponent: float = 1.0) -> np.ndarray:
    ranks = np.arange(1, n_words + 1, dtype=np.float64)
    w = ranks**-exponent
    return w / w.sum()


def synthesize_corpus(
    n_words: int,
    n_sentences: int,
    seed: int,
    sentence_length: tuple[int, int] = (5, 20),
    paragraph_size: tuple[int, int] = (3, 6),
    zipf_exponent: float = 1.0,
) -> TokenizedCorpus:
    """Random word-soup corpus with a Zipf rank-frequency profile.

    Sentence lengths are uniform over ``sentence_length`` (inclusive) and
    sentences are grouped into paragraphs of uniform size over
    ``paragraph_size``. Deterministic in (all arguments).
    """
    rng = np.random.default_rng(seed)
    words = synthetic_words(n_words)
    weights = zipf_weights(n_words, zipf_exponent)

    lengths = rng.integers(sentence_length[0], sentence_length[1] + 1, size=n_sentences)
    total = int(lengths.sum())
    draws = rng.choice(n_words, size=total, p=weights)

    sentences = []
    pos = 0
    for n in lengths:
        sentences.append([words[i] for i in draws[pos : pos + n]])
        pos += n

    paragraphs = []
    i = 0
    while i < len(sentences):
        size = int(rng.integers(paragraph_size[0], paragraph_size[1] + 1))
        paragraphs.append(sentences[i : i + size])
        i += size
    return TokenizedCorpus(paragraphs)


def planted_pair_ids(n_words: int, n_pairs: int, seed: int) -> np.ndarray:
    """Seeded random distinct word-id pairs, shape (n_pairs, 2)."""
    rng = np.random.default_rng(seed)
    pairs = np.empty((n_pairs, 2), dtype=np.int64)
    for i in range(n_pairs):
        a, b = rng.choice(n_words, size=2, replace=False)
        pairs[i] = (a, b)
    return pairs


def planted_cosines(space: PlantedSpace, pairs: np.ndarray) -> np.ndarray:
    rows = space.vectors.astype(np.float64)
    a = rows[pairs[:, 0]]
    b = rows[pairs[:, 1]]
    num = (a * b).sum(axis=1)
    den = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    return num / den
