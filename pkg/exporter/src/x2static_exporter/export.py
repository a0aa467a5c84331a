"""Run a pretrained contextual encoder over a corpus and stream out
word-level vectors.

Words are pre-tokenized (the corpus file is canonical); the encoder's own
subword pieces are mean-pooled back to word level, with special markers
(classification/separator tokens) excluded from the alignment. Sentence scope
encodes one sentence per call; paragraph scope encodes the whole paragraph
once and emits its sentences from that single call, falling back to a
per-sentence call for sentences the truncation window did not fully cover.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .formats import Record, StreamWriter, encode_sentence, load_corpus, load_vocab

_MAX_LENGTH_SENTINEL = 10**6


@dataclass
class ExportConfig:
    model: str
    layer: int = -1  # index into hidden states; 0 = embeddings, -1 = last block
    scope: str = "sentence"
    batch_size: int = 16
    dtype: str = "f32"
    device: str = "cpu"
    max_length: int | None = None  # override the model's input limit

    def __post_init__(self):
        if self.scope not in ("sentence", "paragraph"):
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.dtype not in ("f32", "f16"):
            raise ValueError(f"unknown dtype {self.dtype!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class AlignmentError(Exception):
    """A corpus word produced no encoder subwords (named by position)."""

    def __init__(self, paragraph_id: int, sentence_index: int, token: str):
        self.paragraph_id = paragraph_id
        self.sentence_index = sentence_index
        self.token = token
        super().__init__(
            f"no subword alignment for token {token!r} "
            f"(paragraph {paragraph_id}, sentence {sentence_index})"
        )


@dataclass
class ExportReport:
    dim: int = 0
    paragraphs: int = 0
    sentences: int = 0
    truncated_paragraphs: int = 0
    fallback_sentences: int = 0
    bytes_written: int = 0

    def summary(self) -> str:
        return (
            f"dim={self.dim} paragraphs={self.paragraphs} sentences={self.sentences} "
            f"truncated_paragraphs={self.truncated_paragraphs} "
            f"fallback_sentences={self.fallback_sentences} bytes={self.bytes_written}"
        )


class TeacherEncoder:
    """Wraps a transformers model + fast tokenizer for word-level encoding."""

    def __init__(self, config: ExportConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model, use_fast=True)
        if not self.tokenizer.is_fast:
            raise ValueError("a fast tokenizer is required for word alignment")
        if self.tokenizer.pad_token is None:
            # decoder-style tokenizers (e.g. GPT-2) ship without padding
            self.tokenizer.pad_token = self.tokenizer.eos_token or "[PAD]"
        self.model = AutoModel.from_pretrained(config.model)
        self.model.eval()
        self.model.to(config.device)
        self.dim = int(self.model.config.hidden_size)
        n_layers = int(self.model.config.num_hidden_layers)
        if not (-(n_layers + 1) <= config.layer <= n_layers):
            raise ValueError(
                f"layer {config.layer} invalid for a {n_layers}-layer model"
            )
        self.max_length = config.max_length or self._model_max_length()

    def _model_max_length(self) -> int:
        limit = int(getattr(self.tokenizer, "model_max_length", _MAX_LENGTH_SENTINEL))
        if limit > _MAX_LENGTH_SENTINEL:
            limit = int(getattr(self.model.config, "max_position_embeddings", 512))
        return limit

    @torch.no_grad()
    def encode_word_lists(self, word_lists: list[list[str]]) -> list[list[np.ndarray | None]]:
        """Per input: one mean-pooled vector per word, or None where the
        word's subwords were all truncated away or normalized to nothing."""
        enc = self.tokenizer(
            word_lists,
            is_split_into_words=True,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        enc = enc.to(self.config.device)
        out = self.model(**enc, output_hidden_states=True)
        hidden = out.hidden_states[self.config.layer].cpu().numpy()
        results: list[list[np.ndarray | None]] = []
        for i, words in enumerate(word_lists):
            word_ids = enc.word_ids(i)
            sums = np.zeros((len(words), hidden.shape[2]), dtype=np.float64)
            counts = np.zeros(len(words), dtype=np.int64)
            for pos, wid in enumerate(word_ids):
                if wid is None:  # special tokens and padding
                    continue
                sums[wid] += hidden[i, pos]
                counts[wid] += 1
            vectors: list[np.ndarray | None] = [
                (sums[j] / counts[j]).astype(np.float32) if counts[j] else None
                for j in range(len(words))
            ]
            results.append(vectors)
        return results


def _batched(items: list, size: int) -> Iterable[list]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def _require_aligned(vectors, words, paragraph_id, sentence_index) -> np.ndarray:
    for word, vector in zip(words, vectors):
        if vector is None:
            raise AlignmentError(paragraph_id, sentence_index, word)
    return np.stack(vectors)


def export_teacher_stream(
    corpus_path: str | Path,
    vocab_path: str | Path,
    config: ExportConfig,
    output_path: str | Path,
) -> ExportReport:
    """Encode the corpus and write the stream; returns the run report."""
    paragraphs = load_corpus(corpus_path)
    vocab = load_vocab(vocab_path)
    encoder = TeacherEncoder(config)
    report = ExportReport(dim=encoder.dim, paragraphs=len(paragraphs))

    with open(output_path, "wb") as sink:
        writer = StreamWriter(sink, encoder.dim, config.scope, config.dtype)
        if config.scope == "sentence":
            _export_sentence_scope(paragraphs, vocab, encoder, writer, report)
        else:
            _export_paragraph_scope(paragraphs, vocab, encoder, writer, report)
        report.bytes_written = writer.bytes_written
        report.sentences = writer.records_written
    return report


def _export_sentence_scope(paragraphs, vocab, encoder, writer, report) -> None:
    flat = [
        (pid, sidx, sentence)
        for pid, paragraph in enumerate(paragraphs)
        for sidx, sentence in enumerate(paragraph)
        if sentence
    ]
    for batch in _batched(flat, encoder.config.batch_size):
        encoded = encoder.encode_word_lists([s for _, _, s in batch])
        for (pid, sidx, sentence), vectors in zip(batch, encoded):
            matrix = _require_aligned(vectors, sentence, pid, sidx)
            writer.write(Record(pid, sidx, encode_sentence(sentence, vocab), matrix))


def _export_paragraph_scope(paragraphs, vocab, encoder, writer, report) -> None:
    indexed = list(enumerate(paragraphs))
    for batch in _batched(indexed, encoder.config.batch_size):
        flat_lists = [[w for sentence in paragraph for w in sentence] for _, paragraph in batch]
        encoded = encoder.encode_word_lists(flat_lists)
        for (pid, paragraph), vectors in zip(batch, encoded):
            offsets = np.cumsum([0] + [len(s) for s in paragraph])
            per_sentence = [
                vectors[offsets[i] : offsets[i + 1]] for i in range(len(paragraph))
            ]
            fallback = [
                sidx
                for sidx, vecs in enumerate(per_sentence)
                if any(v is None for v in vecs)
            ]
            if fallback:
                report.truncated_paragraphs += 1
                report.fallback_sentences += len(fallback)
                refilled = encoder.encode_word_lists([paragraph[sidx] for sidx in fallback])
                for sidx, vecs in zip(fallback, refilled):
                    per_sentence[sidx] = vecs
            for sidx, sentence in enumerate(paragraph):
                if not sentence:
                    continue
                matrix = _require_aligned(per_sentence[sidx], sentence, pid, sidx)
                writer.write(Record(pid, sidx, encode_sentence(sentence, vocab), matrix))
