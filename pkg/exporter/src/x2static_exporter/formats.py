"""Readers/writers for the toolchain's on-disk interfaces.

The exporter talks to the embedding toolchain only through files: the
canonical corpus format, the vocabulary TSV, and the binary teacher stream.
The byte layouts here mirror that contract exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np

OOV_ID = 0xFFFFFFFF
MAGIC = b"X2SV"
VERSION = 1
_HEADER = struct.Struct("<4sIIBBH")
_RECORD_HEAD = struct.Struct("<III")
SCOPE_CODES = {"sentence": 0, "paragraph": 1}
DTYPE_CODES = {"f32": 0, "f16": 1}
_SCOPE_NAMES = {v: k for k, v in SCOPE_CODES.items()}
_DTYPE_NAMES = {v: k for k, v in DTYPE_CODES.items()}
_NUMPY_DTYPES = {"f32": np.dtype("<f4"), "f16": np.dtype("<f2")}


class FormatError(Exception):
    pass


def load_corpus(path: str | Path) -> list[list[list[str]]]:
    """Canonical corpus: one sentence per line, space-separated tokens,
    blank line terminates a paragraph."""
    paragraphs: list[list[list[str]]] = []
    current: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line.strip():
                current.append(line.split())
            elif current:
                paragraphs.append(current)
                current = []
    if current:
        paragraphs.append(current)
    return paragraphs


def load_vocab(path: str | Path) -> dict[str, int]:
    """Vocabulary TSV (word<TAB>count per line); id = line position."""
    index: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno + 1}: expected 'word<TAB>count'")
            index[parts[0]] = len(index)
    if not index:
        raise FormatError(f"{path}: empty vocabulary")
    return index


def encode_sentence(tokens: list[str], vocab: dict[str, int]) -> np.ndarray:
    return np.fromiter(
        (vocab.get(tok, OOV_ID) for tok in tokens), dtype=np.uint32, count=len(tokens)
    )


@dataclass
class Record:
    paragraph_id: int
    sentence_index: int
    token_ids: np.ndarray
    vectors: np.ndarray


class StreamWriter:
    """Sequential writer for the binary teacher-vector stream."""

    def __init__(self, sink: BinaryIO, dim: int, scope: str, dtype: str = "f32"):
        if dim < 1:
            raise FormatError("dim must be >= 1")
        self._f = sink
        self.dim = dim
        self.storage = _NUMPY_DTYPES[dtype]
        self.dtype = dtype
        self.bytes_written = self._f.write(
            _HEADER.pack(MAGIC, VERSION, dim, SCOPE_CODES[scope], DTYPE_CODES[dtype], 0)
        )
        self.records_written = 0

    def write(self, record: Record) -> None:
        n = len(record.token_ids)
        if n < 1:
            raise FormatError("empty record")
        if record.vectors.shape != (n, self.dim):
            raise FormatError(
                f"vectors shape {record.vectors.shape} != ({n}, {self.dim})"
            )
        if not np.isfinite(record.vectors).all():
            raise FormatError("non-finite vector component")
        with np.errstate(over="ignore"):
            payload = np.ascontiguousarray(record.vectors, dtype=self.storage)
        if self.dtype == "f16" and not np.isfinite(payload).all():
            raise FormatError("vector component overflows f16 storage")
        self.bytes_written += self._f.write(
            _RECORD_HEAD.pack(record.paragraph_id, record.sentence_index, n)
        )
        self.bytes_written += self._f.write(
            np.ascontiguousarray(record.token_ids, dtype="<u4").tobytes()
        )
        self.bytes_written += self._f.write(payload.tobytes())
        self.records_written += 1


def read_stream(path: str | Path) -> tuple[dict, Iterator[Record]]:
    f = open(path, "rb")
    raw = f.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        f.close()
        raise FormatError("stream shorter than its header")
    magic, version, dim, scope_code, dtype_code, reserved = _HEADER.unpack(raw)
    if magic != MAGIC:
        f.close()
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION or reserved != 0:
        f.close()
        raise FormatError("unsupported stream version/reserved field")
    header = {"dim": dim, "scope": _SCOPE_NAMES[scope_code], "dtype": _DTYPE_NAMES[dtype_code]}
    storage = _NUMPY_DTYPES[header["dtype"]]

    def records() -> Iterator[Record]:
        try:
            index = 0
            while True:
                head = f.read(_RECORD_HEAD.size)
                if not head:
                    return
                if len(head) < _RECORD_HEAD.size:
                    raise FormatError(f"record {index}: header cut short")
                pid, sidx, count = _RECORD_HEAD.unpack(head)
                ids_raw = f.read(4 * count)
                vec_raw = f.read(storage.itemsize * count * dim)
                if len(ids_raw) < 4 * count or len(vec_raw) < storage.itemsize * count * dim:
                    raise FormatError(f"record {index}: truncated")
                ids = np.frombuffer(ids_raw, dtype="<u4").copy()
                vectors = np.frombuffer(vec_raw, dtype=storage).reshape(count, dim)
                yield Record(pid, sidx, ids, vectors.astype(np.float32))
                index += 1
        finally:
            f.close()

    return header, records()
