"""Unsupervised word-similarity evaluation and nearest-neighbor inspection.

Word-pair similarity is the cosine between embeddings; agreement with gold
human ratings is Spearman's rho (Pearson correlation of average-tie
fractional ranks). Pairs containing out-of-vocabulary words are skipped and
reported as coverage.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embeddings import WordEmbeddings
from .errors import (
    ConstantInputError,
    DatasetFormatError,
    InsufficientCoverageError,
    OovQueryError,
    ZeroVectorError,
)


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dim mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine undefined for a zero-norm vector")
    return float(u @ v / (nu * nv))


def fractional_ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks; exactly +/-1 for strictly
    monotone relations."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d and of equal length")
    if len(x) < 2:
        raise ValueError("need at least 2 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantInputError("rho undefined for constant input")
    rx = fractional_ranks(x)
    ry = fractional_ranks(y)
    if np.array_equal(rx, ry):
        return 1.0
    if np.array_equal(rx, (len(x) + 1.0) - ry):
        return -1.0
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    return float((dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy)))


@dataclass
class SimilarityDataset:
    name: str
    pairs: list[tuple[str, str, float]]

    def __post_init__(self):
        if not self.pairs:
            raise DatasetFormatError(f"dataset {self.name!r} has no pairs")
        for a, b, score in self.pairs:
            if not np.isfinite(score):
                raise DatasetFormatError(f"dataset {self.name!r}: non-finite gold score")

    def __len__(self) -> int:
        return len(self.pairs)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for a, b, score in self.pairs:
                f.write(f"{a}\t{b}\t{score:.9g}\n")


def load_similarity_dataset(path: str | Path, name: str | None = None) -> SimilarityDataset:
    """Lines of "word_a word_b score" (tab or space separated); "#" comments
    ignored; words lowercased to match corpus preprocessing."""
    pairs: list[tuple[str, str, float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 3:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected 'word_a word_b score', got {line!r}"
                )
            try:
                score = float(parts[2])
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: bad score {parts[2]!r}") from exc
            pairs.append((parts[0].lower(), parts[1].lower(), score))
    if not pairs:
        raise DatasetFormatError(f"{path}: no pairs found")
    return SimilarityDataset(name or Path(path).stem, pairs)


@dataclass
class EvalReport:
    dataset: str
    spearman_rho: float
    pairs_total: int
    pairs_scored: int

    @property
    def coverage(self) -> float:
        return self.pairs_scored / self.pairs_total if self.pairs_total else 0.0


def evaluate_dataset(embeddings: WordEmbeddings, dataset: SimilarityDataset) -> EvalReport:
    """Score every pair with both words embedded; skip the rest and report
    coverage. Raises :class:`InsufficientCoverageError` below 2 scored pairs."""
    gold: list[float] = []
    predicted: list[float] = []
    for a, b, score in dataset.pairs:
        ia = embeddings.id_of(a)
        ib = embeddings.id_of(b)
        if ia is None or ib is None:
            continue
        try:
            predicted.append(cosine_similarity(embeddings.vectors[ia], embeddings.vectors[ib]))
        except ZeroVectorError:
            continue
        gold.append(score)
    if len(gold) < 2:
        raise InsufficientCoverageError(len(gold), len(dataset))
    rho = spearman_rho(predicted, gold)
    return EvalReport(dataset.name, rho, len(dataset), len(gold))


def nearest_neighbors(
    embeddings: WordEmbeddings, query_word: str, k: int
) -> list[tuple[str, float]]:
    """Top-k neighbors by cosine, excluding the query; cosine ties break by
    ascending word order."""
    qid = embeddings.id_of(query_word)
    if qid is None:
        raise OovQueryError(query_word)
    vectors = embeddings.vectors.astype(np.float64)
    norms = np.linalg.norm(vectors, axis=1)
    q = vectors[qid]
    qn = norms[qid]
    if qn == 0.0:
        raise ZeroVectorError(f"query {query_word!r} has a zero vector")
    safe = np.where(norms == 0.0, 1.0, norms)
    cosines = vectors @ q / (safe * qn)
    cosines[norms == 0.0] = -np.inf
    candidates = [
        (float(cosines[i]), embeddings.words[i]) for i in range(len(vectors)) if i != qid
    ]
    candidates.sort(key=lambda c: (-c[0], c[1]))
    return [(word, cos) for cos, word in candidates[: max(k, 0)]]


def report_tsv(reports: Iterable[EvalReport], average_row: bool = True) -> str:
    """One "dataset rho scored total coverage" line per report, plus an
    unweighted "average" row over per-dataset rho for multi-dataset runs."""
    reports = list(reports)
    lines = []
    for r in reports:
        lines.append(
            f"{r.dataset}\t{r.spearman_rho:.6f}\t{r.pairs_scored}\t{r.pairs_total}"
            f"\t{r.coverage:.4f}"
        )
    if average_row and len(reports) > 1:
        mean_rho = sum(r.spearman_rho for r in reports) / len(reports)
        scored = sum(r.pairs_scored for r in reports)
        total = sum(r.pairs_total for r in reports)
        lines.append(f"average\t{mean_rho:.6f}\t{scored}\t{total}\t{scored / total:.4f}")
    return "\n".join(lines) + "\n"
