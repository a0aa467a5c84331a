"""Consistency checks between a teacher stream and the corpus it claims to
encode: record counts, per-sentence token counts, vocabulary-id agreement,
and vector finiteness."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formats import FormatError, encode_sentence, load_corpus, load_vocab, read_stream


@dataclass
class VerifyReport:
    ok: bool
    records_checked: int
    expected_records: int
    dim: int
    first_error: str | None = None

    def summary(self) -> str:
        status = "clean" if self.ok else f"MISMATCH: {self.first_error}"
        return (
            f"records={self.records_checked}/{self.expected_records} dim={self.dim} {status}"
        )


def verify_stream(
    stream_path: str | Path, corpus_path: str | Path, vocab_path: str | Path
) -> VerifyReport:
    paragraphs = load_corpus(corpus_path)
    vocab = load_vocab(vocab_path)
    expected = [
        (pid, sidx, sentence)
        for pid, paragraph in enumerate(paragraphs)
        for sidx, sentence in enumerate(paragraph)
        if sentence
    ]
    try:
        header, records = read_stream(stream_path)
    except FormatError as exc:
        return VerifyReport(False, 0, len(expected), 0, f"unreadable stream: {exc}")

    checked = 0
    try:
        for record in records:
            if checked >= len(expected):
                return VerifyReport(
                    False, checked, len(expected), header["dim"],
                    f"record {checked}: stream has more records than the corpus",
                )
            pid, sidx, sentence = expected[checked]
            if (record.paragraph_id, record.sentence_index) != (pid, sidx):
                return VerifyReport(
                    False, checked, len(expected), header["dim"],
                    f"record {checked}: position ({record.paragraph_id},"
                    f"{record.sentence_index}) != corpus ({pid},{sidx})",
                )
            if len(record.token_ids) != len(sentence):
                return VerifyReport(
                    False, checked, len(expected), header["dim"],
                    f"record {checked}: {len(record.token_ids)} tokens,"
                    f" corpus sentence has {len(sentence)}",
                )
            if not np.array_equal(record.token_ids, encode_sentence(sentence, vocab)):
                return VerifyReport(
                    False, checked, len(expected), header["dim"],
                    f"record {checked}: token ids disagree with the vocabulary encoding",
                )
            if not np.isfinite(record.vectors).all():
                return VerifyReport(
                    False, checked, len(expected), header["dim"],
                    f"record {checked}: non-finite vector component",
                )
            checked += 1
    except FormatError as exc:
        return VerifyReport(False, checked, len(expected), header["dim"], str(exc))

    if checked != len(expected):
        return VerifyReport(
            False, checked, len(expected), header["dim"],
            f"record count mismatch at index {checked}: stream ended early",
        )
    return VerifyReport(True, checked, len(expected), header["dim"])
