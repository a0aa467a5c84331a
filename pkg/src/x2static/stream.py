"""Teacher-vector stream format, mock teachers, and context encoders.

Wire layout (little-endian):

    magic "X2SV" | version u32=1 | dim u32 | scope u8 | dtype u8 | reserved u16=0

then records until EOF:

    paragraph_id u32 | sentence_index u32 | token_count u32
    | token_count x vocab id u32 (0xFFFFFFFF = OOV)
    | token_count x dim scalars in dtype (0=f32, 1=f16)

Per-token vectors (not per-sentence context vectors) are stored so one stream
serves both the trainer and the ASE baseline; whether the producer encoded
sentences or whole paragraphs is recorded in the header ``scope``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .corpus import OOV_ID, EncodedCorpus
from .errors import EmptyContext, PlantedCoverageError, StreamFormatError, StreamTruncationError
from .planted import PlantedSpace

MAGIC = b"X2SV"
VERSION = 1
HEADER_SIZE = 16
_HEADER_STRUCT = struct.Struct("<4sIIBBH")
_RECORD_HEAD = struct.Struct("<III")

_SCOPE_CODES = {"sentence": 0, "paragraph": 1}
_SCOPE_NAMES = {v: k for k, v in _SCOPE_CODES.items()}
_DTYPE_CODES = {"f32": 0, "f16": 1}
_DTYPE_NAMES = {v: k for k, v in _DTYPE_CODES.items()}
_NUMPY_DTYPES = {"f32": np.dtype("<f4"), "f16": np.dtype("<f2")}


@dataclass(frozen=True)
class StreamHeader:
    dim: int
    scope: str = "sentence"
    dtype: str = "f32"
    version: int = VERSION

    def __post_init__(self):
        if self.dim < 1:
            raise StreamFormatError(f"dim must be >= 1, got {self.dim}")
        if self.scope not in _SCOPE_CODES:
            raise StreamFormatError(f"unknown scope {self.scope!r}")
        if self.dtype not in _DTYPE_CODES:
            raise StreamFormatError(f"unknown dtype {self.dtype!r}")
        if self.version != VERSION:
            raise StreamFormatError(f"unsupported version {self.version}")

    def pack(self) -> bytes:
        return _HEADER_STRUCT.pack(
            MAGIC, self.version, self.dim, _SCOPE_CODES[self.scope], _DTYPE_CODES[self.dtype], 0
        )


@dataclass
class SentenceRecord:
    """Per-token teacher vectors for one sentence."""

    paragraph_id: int
    sentence_index: int
    token_ids: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.token_ids = np.asarray(self.token_ids, dtype=np.uint32)
        self.vectors = np.asarray(self.vectors)
        if self.vectors.ndim != 2:
            raise StreamFormatError("record vectors must be 2-d (tokens x dim)")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SentenceRecord)
            and self.paragraph_id == other.paragraph_id
            and self.sentence_index == other.sentence_index
            and np.array_equal(self.token_ids, other.token_ids)
            and np.array_equal(self.vectors, other.vectors)
        )


def _check_record(record: SentenceRecord, dim: int, index: int) -> None:
    n = len(record.token_ids)
    if n < 1:
        raise StreamFormatError(f"record {index}: empty sentence")
    if record.vectors.shape != (n, dim):
        raise StreamFormatError(
            f"record {index}: vectors shape {record.vectors.shape} "
            f"inconsistent with {n} tokens x dim {dim}"
        )
    if not np.isfinite(record.vectors).all():
        raise StreamFormatError(f"record {index}: non-finite vector component")


def write_stream(
    header: StreamHeader, records: Iterable[SentenceRecord], sink: BinaryIO | str | Path
) -> int:
    """Write the stream; returns the byte count. Each record is validated
    before any of its bytes reach the sink."""
    own = isinstance(sink, (str, Path))
    f: BinaryIO = open(sink, "wb") if own else sink
    storage = _NUMPY_DTYPES[header.dtype]
    try:
        written = f.write(header.pack())
        for index, record in enumerate(records):
            _check_record(record, header.dim, index)
            with np.errstate(over="ignore"):
                payload = np.ascontiguousarray(record.vectors, dtype=storage)
            if header.dtype == "f16" and not np.isfinite(payload).all():
                raise StreamFormatError(
                    f"record {index}: vector component overflows f16 storage"
                )
            written += f.write(
                _RECORD_HEAD.pack(record.paragraph_id, record.sentence_index, len(record.token_ids))
            )
            written += f.write(np.ascontiguousarray(record.token_ids, dtype="<u4").tobytes())
            written += f.write(payload.tobytes())
        return written
    finally:
        if own:
            f.close()


def read_header(source: BinaryIO) -> StreamHeader:
    raw = source.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise StreamFormatError(f"stream shorter than the {HEADER_SIZE}-byte header")
    magic, version, dim, scope_code, dtype_code, reserved = _HEADER_STRUCT.unpack(raw)
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise StreamFormatError(f"unsupported version {version}")
    if scope_code not in _SCOPE_NAMES:
        raise StreamFormatError(f"unknown scope code {scope_code}")
    if dtype_code not in _DTYPE_NAMES:
        raise StreamFormatError(f"unknown dtype code {dtype_code}")
    if reserved != 0:
        raise StreamFormatError(f"reserved field must be 0, got {reserved}")
    return StreamHeader(dim=dim, scope=_SCOPE_NAMES[scope_code], dtype=_DTYPE_NAMES[dtype_code])


def read_stream(
    source: BinaryIO | str | Path,
) -> tuple[StreamHeader, Iterator[SentenceRecord]]:
    """Validate the header eagerly, then yield records lazily.

    f16 streams come back widened to float32. A file opened from a path is
    closed when the iterator is exhausted or garbage-collected.
    """
    own = isinstance(source, (str, Path))
    f: BinaryIO = open(source, "rb") if own else source
    try:
        header = read_header(f)
    except Exception:
        if own:
            f.close()
        raise
    storage = _NUMPY_DTYPES[header.dtype]
    item = storage.itemsize

    def records() -> Iterator[SentenceRecord]:
        try:
            index = 0
            while True:
                head = f.read(_RECORD_HEAD.size)
                if not head:
                    return
                if len(head) < _RECORD_HEAD.size:
                    raise StreamTruncationError(index, "record header cut short")
                paragraph_id, sentence_index, count = _RECORD_HEAD.unpack(head)
                if count < 1:
                    raise StreamFormatError(f"record {index}: zero token count")
                ids_raw = f.read(4 * count)
                if len(ids_raw) < 4 * count:
                    raise StreamTruncationError(index, "token ids cut short")
                vec_raw = f.read(item * count * header.dim)
                if len(vec_raw) < item * count * header.dim:
                    raise StreamTruncationError(index, "vectors cut short")
                token_ids = np.frombuffer(ids_raw, dtype="<u4")
                vectors = np.frombuffer(vec_raw, dtype=storage).reshape(count, header.dim)
                if header.dtype == "f16":
                    vectors = vectors.astype(np.float32)
                else:
                    vectors = vectors.copy()
                yield SentenceRecord(paragraph_id, sentence_index, token_ids.copy(), vectors)
                index += 1
        finally:
            if own:
                f.close()

    return header, records()


def _hash_vector(dim: int, seed: int, token_id: int, bucket: int, ctx_hash: bytes) -> np.ndarray:
    key = struct.pack("<QIB", seed & 0xFFFFFFFFFFFFFFFF, token_id, bucket) + ctx_hash
    digest = hashlib.blake2b(key, digest_size=16).digest()
    gen = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
    return gen.standard_normal(dim).astype(np.float32)


def _context_hash(ids: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(ids, dtype="<u4").tobytes(), digest_size=8).digest()


def mock_teacher_encode(
    corpus: EncodedCorpus,
    mode: str,
    planted: PlantedSpace | None = None,
    scope: str = "sentence",
    dim: int | None = None,
    seed: int = 0,
    noise_scale: float = 0.0,
) -> Iterator[SentenceRecord]:
    """Deterministic stand-in for a contextual teacher.

    hash mode: each token's vector is a pseudo-random function of
    (token id, position bucket, context hash, seed); the context hash covers
    the sentence or the whole paragraph depending on ``scope``, so the same
    word gets different vectors in different contexts.

    planted mode: each token's vector is its planted row, plus optional
    seeded noise of exact norm ``noise_scale``.
    """
    if mode not in ("hash", "planted"):
        raise ValueError(f"unknown mock mode {mode!r}")
    if scope not in _SCOPE_CODES:
        raise ValueError(f"unknown scope {scope!r}")
    if mode == "planted":
        if planted is None:
            raise ValueError("planted mode requires a PlantedSpace")
        dim = planted.dim
    elif dim is None or dim < 1:
        raise ValueError("hash mode requires a positive dim")

    noise_rng = np.random.default_rng(seed) if noise_scale else None

    for paragraph_id, paragraph in enumerate(corpus.paragraphs):
        if scope == "paragraph" and paragraph:
            para_ids = np.concatenate(paragraph)
        for sentence_index, ids in enumerate(paragraph):
            if len(ids) == 0:
                continue
            if mode == "hash":
                ctx = _context_hash(para_ids if scope == "paragraph" else ids)
                vectors = np.stack(
                    [
                        _hash_vector(dim, seed, int(tok), min(pos, 15), ctx)
                        for pos, tok in enumerate(ids)
                    ]
                )
            else:
                if np.any(ids >= len(planted.vectors)):
                    bad = int(ids[ids >= len(planted.vectors)][0])
                    raise PlantedCoverageError(
                        f"token id {bad} has no planted row "
                        f"(planted space covers {len(planted.vectors)} words)"
                    )
                vectors = planted.vectors[ids].astype(np.float32)
                if noise_rng is not None:
                    noise = noise_rng.standard_normal((len(ids), dim))
                    noise *= noise_scale / np.linalg.norm(noise, axis=1, keepdims=True)
                    vectors = (vectors.astype(np.float64) + noise).astype(np.float32)
            yield SentenceRecord(paragraph_id, sentence_index, ids, vectors)


def context_vector(record: SentenceRecord) -> np.ndarray:
    """Mean of ALL token vectors in the record (target positions included),
    accumulated in float64."""
    if len(record.token_ids) == 0:
        raise ValueError("context_vector requires a non-empty record")
    return record.vectors.astype(np.float64).mean(axis=0)


def static_context_vector(
    sentence_ids: np.ndarray, target_position: int, V: np.ndarray
) -> np.ndarray:
    """Mean of V-rows over the sentence minus the target word.

    Every occurrence of the target's id is excluded (the target's row is never
    read), as are OOV tokens. Raises :class:`EmptyContext` when nothing is
    left.
    """
    sentence_ids = np.asarray(sentence_ids)
    target_id = sentence_ids[target_position]
    mask = (sentence_ids != target_id) & (sentence_ids != OOV_ID)
    if not mask.any():
        raise EmptyContext(f"no usable context token at position {target_position}")
    rows = V[sentence_ids[mask].astype(np.int64)]
    return rows.astype(np.float64).mean(axis=0)
