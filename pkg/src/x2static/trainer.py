"""Negative-sampling distillation of static target embeddings.

For every sentence the context is either the mean of frozen teacher token
vectors (teacher mode) or the mean of trainable context rows excluding the
target word (static_baseline mode). Each surviving in-vocabulary target
contributes a logistic loss against its context and k sampled negatives;
gradients are summed over a batch and applied with one lazy Adam step, so
rows never touched by a batch stay bit-identical.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .corpus import OOV_ID, EncodedCorpus, Vocabulary
from .embeddings import init_matrix
from .errors import (
    EmptyTrainingSetError,
    NonFiniteGradientError,
    SamplingError,
    StreamFormatError,
)
from .stream import SentenceRecord, read_header, read_stream

NEGATIVE_POWER = 0.75


@dataclass
class TrainerConfig:
    """Hyperparameters; one fixed default set is used for every teacher."""

    epochs: int = 1
    negatives: int = 10
    subsample_t: float = 5e-6
    learning_rate: float = 0.001
    batch_size: int = 128
    seed: int = 1
    mode: str = "teacher"  # "teacher" or "static_baseline"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    dim: int | None = None  # required in static_baseline mode
    threads: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.negatives < 0:
            raise ValueError("negatives must be >= 0")
        if not (0.0 < self.adam_beta1 < 1.0 and 0.0 < self.adam_beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.adam_eps <= 0 or self.learning_rate <= 0 or self.subsample_t <= 0:
            raise ValueError("learning_rate, subsample_t and adam_eps must be > 0")
        if self.mode not in ("teacher", "static_baseline"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def logistic_loss(x):
    """log(1 + e^-x), overflow-free for any magnitude.

    Accepts scalars or arrays; scalar in, float out.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.maximum(-arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _as_negative_matrix(negatives, dim: int) -> np.ndarray:
    negs = np.asarray(negatives, dtype=np.float64)
    return negs.reshape(0, dim) if negs.size == 0 else negs.reshape(-1, dim)


def pair_loss(u_target, context, negatives) -> float:
    """loss(u.v) + sum over negatives of loss(-u_neg.v)."""
    u = np.asarray(u_target, dtype=np.float64)
    v = np.asarray(context, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dim mismatch: target {u.shape} vs context {v.shape}")
    negs = _as_negative_matrix(negatives, v.shape[0])
    total = logistic_loss(float(u @ v))
    if negs.size:
        total += float(np.sum(logistic_loss(-(negs @ v))))
    return total


def pair_loss_grads(u_target, context, negatives):
    """Loss plus analytic gradients w.r.t. the target row, each negative row,
    and the context vector (the latter is only consumed in static_baseline
    mode, where the context is itself trainable)."""
    u = np.asarray(u_target, dtype=np.float64)
    v = np.asarray(context, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dim mismatch: target {u.shape} vs context {v.shape}")
    negs = _as_negative_matrix(negatives, v.shape[0])

    x0 = float(u @ v)
    xn = negs @ v
    loss = logistic_loss(x0) + (float(np.sum(logistic_loss(-xn))) if xn.size else 0.0)

    c0 = float(_sigmoid(np.float64(x0))) - 1.0
    cn = _sigmoid(xn)
    grad_u = c0 * v
    grad_negs = cn[:, None] * v[None, :]
    grad_context = c0 * u + (cn @ negs if xn.size else 0.0)
    return loss, grad_u, grad_negs, grad_context


def keep_target(word_frequency: float, t: float, rng: np.random.Generator) -> bool:
    """Keep a target with probability min(1, sqrt(t/f) + t/f).

    Always consumes exactly one uniform draw, so corpus traversal stays
    reproducible regardless of the outcome.
    """
    if not (0.0 < word_frequency <= 1.0):
        raise ValueError(f"frequency must lie in (0, 1], got {word_frequency}")
    p = min(1.0, (t / word_frequency) ** 0.5 + t / word_frequency)
    return rng.random() < p


def keep_probabilities(frequencies: np.ndarray, t: float) -> np.ndarray:
    ratio = t / np.asarray(frequencies, dtype=np.float64)
    return np.minimum(1.0, np.sqrt(ratio) + ratio)


class NegativeTable:
    """count^0.75 sampling distribution over the vocabulary (CDF + binary search)."""

    def __init__(self, counts, power: float = NEGATIVE_POWER):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.ndim != 1 or len(counts) == 0:
            raise ValueError("counts must be a non-empty 1-d array")
        weights = counts**power
        self.probabilities = weights / weights.sum()
        self._cdf = np.cumsum(self.probabilities)
        self._cdf[-1] = 1.0

    def __len__(self) -> int:
        return len(self.probabilities)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n unconditioned draws from the count^0.75 distribution."""
        return np.searchsorted(self._cdf, rng.random(n), side="right").astype(np.int64)

    def sample(self, k: int, target_id: int, rng: np.random.Generator) -> np.ndarray:
        """k draws, redrawing any sample equal to ``target_id``."""
        if k == 0:
            return np.empty(0, dtype=np.int64)
        if len(self) < 2:
            raise SamplingError("cannot exclude the target from a 1-word vocabulary")
        ids = self.draw(k, rng)
        mask = ids == target_id
        while mask.any():
            ids[mask] = self.draw(int(mask.sum()), rng)
            mask = ids == target_id
        return ids


def sample_negatives(
    table: NegativeTable, k: int, target_id: int, rng: np.random.Generator
) -> np.ndarray:
    return table.sample(k, target_id, rng)


@dataclass
class AdamState:
    """Per-row moments and step counts; untouched rows stay all-zero."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: np.ndarray

    @classmethod
    def zeros(cls, n_rows: int, dim: int, dtype=np.float64) -> "AdamState":
        return cls(
            first_moment=np.zeros((n_rows, dim), dtype=dtype),
            second_moment=np.zeros((n_rows, dim), dtype=dtype),
            step_count=np.zeros(n_rows, dtype=np.int64),
        )


def lazy_adam_step(
    params: np.ndarray,
    state: AdamState,
    touched_rows: np.ndarray,
    row_gradients: np.ndarray,
    config: TrainerConfig,
    batch_index: int | None = None,
) -> None:
    """One Adam update restricted to ``touched_rows`` (in place).

    Bias correction uses per-row step counts; rows outside ``touched_rows``
    are not read or written, so they stay bit-identical.
    """
    rows = np.asarray(touched_rows, dtype=np.int64)
    if rows.size == 0:
        return
    if len(np.unique(rows)) != len(rows):
        raise ValueError("touched_rows must be unique")
    grads = np.asarray(row_gradients, dtype=np.float64)
    if grads.shape != (len(rows), params.shape[1]):
        raise ValueError(f"row_gradients shape {grads.shape} does not match rows x dim")
    if not np.isfinite(grads).all():
        bad = int(rows[np.argwhere(~np.isfinite(grads))[0][0]])
        raise NonFiniteGradientError(bad, batch_index)

    b1, b2 = config.adam_beta1, config.adam_beta2
    state.step_count[rows] += 1
    t = state.step_count[rows].astype(np.float64)

    m = b1 * state.first_moment[rows] + (1.0 - b1) * grads
    v = b2 * state.second_moment[rows] + (1.0 - b2) * grads * grads
    state.first_moment[rows] = m
    state.second_moment[rows] = v

    m_hat = m / (1.0 - b1**t)[:, None]
    v_hat = v / (1.0 - b2**t)[:, None]
    update = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    params[rows] = (params[rows].astype(np.float64) - update).astype(params.dtype)


@dataclass
class TrainResult:
    U: np.ndarray
    V: np.ndarray | None
    epoch_losses: list[float]
    examples_trained: int
    examples_skipped: int
    dim: int


class _BatchAccumulator:
    """Sums example gradients per row (float64) until a flush."""

    def __init__(self, dim: int):
        self.dim = dim
        self._rows: list[np.ndarray] = []
        self._grads: list[np.ndarray] = []

    def add(self, rows: np.ndarray, grads: np.ndarray) -> None:
        self._rows.append(rows)
        self._grads.append(grads)

    def flush(self, params, state, config, batch_index) -> None:
        if not self._rows:
            return
        all_rows = np.concatenate(self._rows)
        all_grads = np.vstack(self._grads)
        uniq, inverse = np.unique(all_rows, return_inverse=True)
        agg = np.zeros((len(uniq), self.dim), dtype=np.float64)
        np.add.at(agg, inverse, all_grads)
        lazy_adam_step(params, state, uniq, agg, config, batch_index)
        self._rows.clear()
        self._grads.clear()


RecordSource = str | Path | Sequence[SentenceRecord]


def _record_factory(source: RecordSource) -> tuple[Callable[[], Iterator[SentenceRecord]], int]:
    """Normalize a stream path or record sequence into (re-iterable, dim)."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path, "rb") as f:
            header = read_header(f)
        return (lambda: read_stream(path)[1]), header.dim
    records = list(source)
    if not records:
        raise EmptyTrainingSetError("record source is empty")
    dim = records[0].vectors.shape[1]
    return (lambda: iter(records)), dim


def _example_grads(U, wid, negs, ctx32):
    """Gradient rows for one (target, context) example; float64 pieces."""
    idx = np.empty(len(negs) + 1, dtype=np.int64)
    idx[0] = wid
    idx[1:] = negs
    dots = (U[idx] @ ctx32).astype(np.float64)
    e = np.exp(-np.abs(dots))
    sig = np.where(dots >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    # loss terms: logistic(x0) for the target, logistic(-xj) for negatives
    y = -dots
    y[0] = dots[0]
    loss = float((np.maximum(-y, 0.0) + np.log1p(e)).sum())
    coef = sig
    coef[0] -= 1.0
    grads = coef[:, None] * ctx32.astype(np.float64)[None, :]
    return idx, grads, loss, coef


def _validate_ids(ids: np.ndarray, vocab_size: int) -> None:
    bad = (ids != OOV_ID) & (ids >= vocab_size)
    if bad.any():
        raise StreamFormatError(
            f"stream token id {int(ids[bad][0])} outside vocabulary of size {vocab_size}"
        )


def _train_teacher_shard(
    records: Iterable[SentenceRecord],
    U: np.ndarray,
    state: AdamState,
    table: NegativeTable,
    pkeep: np.ndarray,
    config: TrainerConfig,
    rng: np.random.Generator,
    batch_offset: int = 0,
) -> tuple[float, int, int, int]:
    """One epoch pass over ``records``; returns (loss sum, examples, skipped, batches)."""
    n_vocab = len(pkeep)
    k = config.negatives
    batch = _BatchAccumulator(U.shape[1])
    in_batch = 0
    batch_index = batch_offset
    loss_sum = 0.0
    examples = 0
    skipped = 0
    for record in records:
        ids = record.token_ids
        if len(ids) == 0:
            skipped += 1
            continue
        _validate_ids(ids, n_vocab)
        in_vocab = ids[ids != OOV_ID].astype(np.int64)
        if len(in_vocab) == 0:
            continue
        draws = rng.random(len(in_vocab))
        chosen = in_vocab[draws < pkeep[in_vocab]]
        if len(chosen) == 0:
            continue
        ctx32 = record.vectors.astype(np.float64).mean(axis=0).astype(np.float32)
        for wid in chosen:
            negs = table.sample(k, int(wid), rng)
            idx, grads, loss, _ = _example_grads(U, int(wid), negs, ctx32)
            batch.add(idx, grads)
            loss_sum += loss
            examples += 1
            in_batch += 1
            if in_batch == config.batch_size:
                batch.flush(U, state, config, batch_index)
                batch_index += 1
                in_batch = 0
    batch.flush(U, state, config, batch_index)
    if in_batch:
        batch_index += 1
    return loss_sum, examples, skipped, batch_index - batch_offset


def _distill_teacher(source: RecordSource, vocab: Vocabulary, config: TrainerConfig) -> TrainResult:
    records_of, dim = _record_factory(source)
    if config.dim is not None and config.dim != dim:
        raise StreamFormatError(f"stream dim {dim} != configured dim {config.dim}")

    rng = np.random.default_rng(config.seed)
    U = init_matrix(len(vocab), dim, rng)
    state = AdamState.zeros(len(vocab), dim)
    table = NegativeTable(vocab.counts)
    pkeep = keep_probabilities(vocab.frequencies(), config.subsample_t)

    if config.threads > 1:
        return _distill_teacher_hogwild(records_of, vocab, config, U, state, table, pkeep)

    epoch_losses = []
    total_examples = 0
    total_skipped = 0
    batches_done = 0
    for _ in range(config.epochs):
        loss_sum, examples, skipped, batches = _train_teacher_shard(
            records_of(), U, state, table, pkeep, config, rng, batches_done
        )
        batches_done += batches
        total_examples += examples
        total_skipped += skipped
        epoch_losses.append(loss_sum / examples if examples else float("nan"))
    if total_examples == 0:
        raise EmptyTrainingSetError("no example survived subsampling/OOV filtering")
    return TrainResult(U, None, epoch_losses, total_examples, total_skipped, dim)


def _distill_teacher_hogwild(records_of, vocab, config, U, state, table, pkeep) -> TrainResult:
    """Lock-free sharded training: workers update shared U without
    synchronization. Explicitly nondeterministic; excluded from bit-exactness
    guarantees."""
    records = list(records_of())
    shards = [records[i :: config.threads] for i in range(config.threads)]
    epoch_losses = []
    total_examples = 0
    total_skipped = 0
    for epoch in range(config.epochs):
        results: list[tuple[float, int, int, int] | None] = [None] * config.threads

        def work(slot: int) -> None:
            rng = np.random.default_rng((config.seed, epoch, slot))
            results[slot] = _train_teacher_shard(
                shards[slot], U, state, table, pkeep, config, rng
            )

        threads = [threading.Thread(target=work, args=(i,)) for i in range(config.threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        loss = sum(r[0] for r in results)
        n = sum(r[1] for r in results)
        total_examples += n
        total_skipped += sum(r[2] for r in results)
        epoch_losses.append(loss / n if n else float("nan"))
    if total_examples == 0:
        raise EmptyTrainingSetError("no example survived subsampling/OOV filtering")
    return TrainResult(U, None, epoch_losses, total_examples, total_skipped, U.shape[1])


def _distill_static(corpus: EncodedCorpus, vocab: Vocabulary, config: TrainerConfig) -> TrainResult:
    if config.dim is None:
        raise ValueError("static_baseline mode requires config.dim")
    if config.threads > 1:
        raise ValueError("threaded training is only defined for teacher mode")
    dim = config.dim
    k = config.negatives
    rng = np.random.default_rng(config.seed)
    U = init_matrix(len(vocab), dim, rng)
    V = init_matrix(len(vocab), dim, rng)
    state_u = AdamState.zeros(len(vocab), dim)
    state_v = AdamState.zeros(len(vocab), dim)
    table = NegativeTable(vocab.counts)
    pkeep = keep_probabilities(vocab.frequencies(), config.subsample_t)

    epoch_losses = []
    total_examples = 0
    skipped = 0
    batch_u = _BatchAccumulator(dim)
    batch_v = _BatchAccumulator(dim)
    in_batch = 0
    batch_index = 0
    for _ in range(config.epochs):
        loss_sum = 0.0
        examples = 0
        for ids in corpus.sentences():
            if len(ids) == 0:
                continue
            ids64 = ids.astype(np.int64)
            positions = np.flatnonzero(ids != OOV_ID)
            if len(positions) == 0:
                continue
            draws = rng.random(len(positions))
            surviving = positions[draws < pkeep[ids64[positions]]]
            for pos in surviving:
                wid = int(ids64[pos])
                ctx_mask = (ids64 != wid) & (ids != OOV_ID)
                if not ctx_mask.any():
                    skipped += 1
                    continue
                ctx_rows = ids64[ctx_mask]
                ctx32 = V[ctx_rows].astype(np.float64).mean(axis=0).astype(np.float32)
                negs = table.sample(k, wid, rng)
                idx, grads, loss, coef = _example_grads(U, wid, negs, ctx32)
                batch_u.add(idx, grads)
                # d(context)/d(V_row) = 1/m for each context occurrence
                grad_ctx = coef @ U[idx].astype(np.float64) / len(ctx_rows)
                batch_v.add(ctx_rows, np.tile(grad_ctx, (len(ctx_rows), 1)))
                loss_sum += loss
                examples += 1
                in_batch += 1
                if in_batch == config.batch_size:
                    batch_u.flush(U, state_u, config, batch_index)
                    batch_v.flush(V, state_v, config, batch_index)
                    batch_index += 1
                    in_batch = 0
        batch_u.flush(U, state_u, config, batch_index)
        batch_v.flush(V, state_v, config, batch_index)
        if in_batch:
            batch_index += 1
            in_batch = 0
        total_examples += examples
        epoch_losses.append(loss_sum / examples if examples else float("nan"))
    if total_examples == 0:
        raise EmptyTrainingSetError("no example survived subsampling/context filtering")
    return TrainResult(U, V, epoch_losses, total_examples, skipped, dim)


def distill(
    source: RecordSource | EncodedCorpus, vocab: Vocabulary, config: TrainerConfig
) -> TrainResult:
    """Train the target matrix U (and V in static_baseline mode).

    teacher mode: ``source`` is a stream path or a sequence of records; the
    embedding dim comes from the stream header and the teacher stays frozen.
    static_baseline mode: ``source`` is an :class:`EncodedCorpus` and
    ``config.dim`` chooses the width.
    """
    if config.mode == "teacher":
        if isinstance(source, EncodedCorpus):
            raise ValueError("teacher mode needs a record stream, not an EncodedCorpus")
        return _distill_teacher(source, vocab, config)
    if not isinstance(source, EncodedCorpus):
        raise ValueError("static_baseline mode needs an EncodedCorpus")
    return _distill_static(source, vocab, config)
