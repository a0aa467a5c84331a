"""Aggregated static embeddings: per-word average pooling of teacher vectors.

Sums accumulate in float64 so the finalized means are order-invariant to
within rounding; accumulators merge by plain summation, so shards can be
combined in any order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import OOV_ID, Vocabulary
from .embeddings import WordEmbeddings
from .errors import AseEmptyError
from .stream import SentenceRecord


class AseAccumulator:
    """Running per-word vector sums and occurrence counts.

    ``cap`` bounds how many occurrences of a word contribute (None for
    unlimited, the default); once a word hits the cap, further occurrences
    are ignored.
    """

    def __init__(self, vocab: Vocabulary, dim: int, cap: int | None = None):
        if cap is not None and cap < 1:
            raise ValueError("cap must be >= 1 or None")
        self.vocab = vocab
        self.dim = dim
        self.cap = cap
        self.sums = np.zeros((len(vocab), dim), dtype=np.float64)
        self.counts = np.zeros(len(vocab), dtype=np.int64)

    def add_record(self, record: SentenceRecord) -> None:
        if record.vectors.shape[1] != self.dim:
            raise ValueError(
                f"record dim {record.vectors.shape[1]} != accumulator dim {self.dim}"
            )
        ids = record.token_ids
        mask = ids != OOV_ID
        if not mask.any():
            return
        rows = ids[mask].astype(np.int64)
        vecs = record.vectors[mask].astype(np.float64)
        if self.cap is None:
            np.add.at(self.sums, rows, vecs)
            np.add.at(self.counts, rows, 1)
        else:
            for row, vec in zip(rows, vecs):
                if self.counts[row] < self.cap:
                    self.sums[row] += vec
                    self.counts[row] += 1

    def add_stream(self, records: Iterable[SentenceRecord]) -> None:
        for record in records:
            self.add_record(record)

    def merge(self, other: "AseAccumulator") -> None:
        """Combine a shard into this accumulator (associative, commutative)."""
        if other.dim != self.dim or len(other.vocab) != len(self.vocab):
            raise ValueError("cannot merge accumulators of different shape")
        self.sums += other.sums
        self.counts += other.counts


def ase_accumulate(acc: AseAccumulator, record: SentenceRecord) -> AseAccumulator:
    acc.add_record(record)
    return acc


@dataclass
class CoverageReport:
    """Which vocabulary words were seen, and how often."""

    words: list[str]
    counts: np.ndarray

    @property
    def seen(self) -> int:
        return int((self.counts > 0).sum())

    @property
    def unseen(self) -> int:
        return len(self.words) - self.seen

    def unseen_words(self) -> list[str]:
        return [w for w, c in zip(self.words, self.counts) if c == 0]

    def save_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for word, count in zip(self.words, self.counts):
                f.write(f"{word}\t{int(count)}\n")


def ase_finalize(acc: AseAccumulator) -> tuple[WordEmbeddings, CoverageReport]:
    """Means for every seen word (unseen words are excluded from the output
    and flagged in the report). Pure function of the accumulator, so calling
    it twice gives identical results."""
    report = CoverageReport(list(acc.vocab.words), acc.counts.copy())
    seen = acc.counts > 0
    if not seen.any():
        raise AseEmptyError("no vocabulary word was seen in the stream")
    means = acc.sums[seen] / acc.counts[seen, None]
    words = [w for w, s in zip(acc.vocab.words, seen) if s]
    return WordEmbeddings(words, means), report
