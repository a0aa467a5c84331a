"""Dense row-per-word embedding matrices and their on-disk formats.

Text format is word2vec-style: a "<vocab_size> <dim>" header line, then one
line per word in id order with 9-significant-digit decimals. Nine digits are
exactly enough to round-trip IEEE float32, so text save/load is bit-exact.
The binary checkpoint is a (dim u32, vocab u32) header followed by raw
little-endian float32 rows.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import EmbeddingFormatError


class WordEmbeddings:
    """An embedding matrix plus its word index."""

    def __init__(self, words: list[str], vectors: np.ndarray):
        vectors = np.asarray(vectors)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d matrix")
        if len(words) != vectors.shape[0]:
            raise ValueError(
                f"row count {vectors.shape[0]} != word count {len(words)}"
            )
        if not np.isfinite(vectors).all():
            raise ValueError("embedding matrix contains non-finite entries")
        self.words = list(words)
        self.vectors = vectors
        self._index = {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def id_of(self, word: str) -> int | None:
        return self._index.get(word)

    def vector(self, word: str) -> np.ndarray:
        i = self._index.get(word)
        if i is None:
            raise KeyError(word)
        return self.vectors[i]

    def save_text(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{len(self.words)} {self.dim}\n")
            for word, row in zip(self.words, self.vectors):
                f.write(word)
                for x in row:
                    f.write(f" {float(x):.9g}")
                f.write("\n")

    @classmethod
    def load_text(cls, path: str | Path, dtype=np.float32) -> "WordEmbeddings":
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise EmbeddingFormatError(f"{path}: bad header line")
            try:
                n, dim = int(header[0]), int(header[1])
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}: bad header line") from exc
            words: list[str] = []
            vectors = np.empty((n, dim), dtype=dtype)
            for i in range(n):
                line = f.readline()
                if not line:
                    raise EmbeddingFormatError(f"{path}: expected {n} rows, got {i}")
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise EmbeddingFormatError(
                        f"{path}: row {i} has {len(parts) - 1} values, expected {dim}"
                    )
                words.append(parts[0])
                vectors[i] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        return cls(words, vectors)

    def save_binary(self, path: str | Path) -> None:
        """Checkpoint: (dim u32, vocab size u32) header + raw f32 rows.

        Words are not stored; pair the file with the vocabulary it was
        trained against (rows are in id order).
        """
        rows = np.ascontiguousarray(self.vectors, dtype="<f4")
        with open(path, "wb") as f:
            f.write(struct.pack("<II", self.dim, len(self.words)))
            f.write(rows.tobytes())

    @classmethod
    def load_binary(cls, path: str | Path, words: list[str]) -> "WordEmbeddings":
        with open(path, "rb") as f:
            head = f.read(8)
            if len(head) != 8:
                raise EmbeddingFormatError(f"{path}: truncated header")
            dim, n = struct.unpack("<II", head)
            if n != len(words):
                raise EmbeddingFormatError(
                    f"{path}: checkpoint has {n} rows, vocabulary has {len(words)} words"
                )
            data = f.read(4 * dim * n)
            if len(data) != 4 * dim * n:
                raise EmbeddingFormatError(f"{path}: truncated rows")
        vectors = np.frombuffer(data, dtype="<f4").reshape(n, dim).copy()
        return cls(list(words), vectors)


def init_matrix(n_rows: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """word2vec-style init: i.i.d. uniform in [-0.5/dim, +0.5/dim], float32."""
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(n_rows, dim)).astype(np.float32)
