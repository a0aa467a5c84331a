"""Raw-text preprocessing, vocabulary construction, and id-encoding.

The pipeline is deterministic by construction: a fixed rule-based tokenizer
(no external NLP dependency), an explicit paragraph filter, and a total
ordering on vocabulary entries. Identical input bytes and config always
produce byte-identical corpus, vocabulary, and encoding.
"""

from __future__ import annotations

import io
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    CorpusDecodeError,
    EmptyVocabularyError,
    VocabularyFormatError,
)

# Reserved maximal u32 id, never a valid vocabulary id.
OOV_ID = 0xFFFFFFFF

# Paragraphs with fewer sentences or fewer raw characters than this are dropped.
MIN_PARAGRAPH_SENTENCES = 3
MIN_PARAGRAPH_CHARS = 140

_SENTENCE_BREAK = re.compile(r"(?<=[.?!])\s+")


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs for :func:`preprocess_corpus`; defaults match the paragraph filter."""

    min_sentences: int = MIN_PARAGRAPH_SENTENCES
    min_chars: int = MIN_PARAGRAPH_CHARS


Sentence = list[str]
Paragraph = list[Sentence]


@dataclass
class TokenizedCorpus:
    """Paragraphs of sentences of lowercase tokens."""

    paragraphs: list[Paragraph] = field(default_factory=list)

    def sentences(self) -> Iterator[Sentence]:
        for paragraph in self.paragraphs:
            yield from paragraph

    def num_sentences(self) -> int:
        return sum(len(p) for p in self.paragraphs)

    def num_tokens(self) -> int:
        return sum(len(s) for p in self.paragraphs for s in p)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TokenizedCorpus) and self.paragraphs == other.paragraphs


@dataclass
class EncodedCorpus:
    """Same nesting as :class:`TokenizedCorpus` with tokens mapped to vocab ids.

    Out-of-vocabulary tokens carry the ``OOV_ID`` sentinel. Sentence arrays are
    uint32 so they can be written to the teacher stream unchanged.
    """

    paragraphs: list[list[np.ndarray]] = field(default_factory=list)

    def sentences(self) -> Iterator[np.ndarray]:
        for paragraph in self.paragraphs:
            yield from paragraph

    def num_tokens(self) -> int:
        return sum(len(s) for p in self.paragraphs for s in p)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Split on Unicode whitespace, then peel leading/trailing punctuation.

    Each peeled punctuation character becomes its own token; internal
    apostrophes/hyphens stay attached ("don't", "well-known"). An all-punct
    chunk decomposes into one token per character.
    """
    tokens: list[str] = []
    for chunk in text.split():
        start, end = 0, len(chunk)
        while start < end and _is_punct(chunk[start]):
            start += 1
        while end > start and _is_punct(chunk[end - 1]):
            end -= 1
        tokens.extend(chunk[:start])
        if start < end:
            tokens.append(chunk[start:end])
        tokens.extend(chunk[end:])
    return tokens


def split_sentences(paragraph_text: str) -> list[str]:
    """Sentence strings of a raw paragraph.

    Explicit line breaks win; otherwise split after [.?!] followed by
    whitespace. Whitespace-only pieces are discarded.
    """
    if "\n" in paragraph_text:
        pieces = paragraph_text.split("\n")
    else:
        pieces = _SENTENCE_BREAK.split(paragraph_text)
    return [p.strip() for p in pieces if p.strip()]


def _paragraph_blocks(text: str) -> Iterator[str]:
    lines = text.split("\n")
    block: list[str] = []
    for line in lines:
        if line.strip():
            block.append(line)
        elif block:
            yield "\n".join(block)
            block = []
    if block:
        yield "\n".join(block)


def _decode_utf8(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusDecodeError(exc.start, exc.reason) from exc


def preprocess_corpus(
    raw: str | bytes | io.IOBase, config: PreprocessConfig = PreprocessConfig()
) -> TokenizedCorpus:
    """Lowercase, tokenize, and filter raw text into a :class:`TokenizedCorpus`.

    Paragraphs are blank-line separated in the input. A paragraph survives only
    with at least ``config.min_sentences`` sentences AND at least
    ``config.min_chars`` characters of raw (pre-tokenization) text.
    """
    if isinstance(raw, io.IOBase) or hasattr(raw, "read"):
        raw = raw.read()
    if isinstance(raw, (bytes, bytearray)):
        text = _decode_utf8(bytes(raw))
    else:
        text = raw

    paragraphs: list[Paragraph] = []
    for block in _paragraph_blocks(text):
        sentence_texts = split_sentences(block)
        if len(sentence_texts) < config.min_sentences:
            continue
        if len(block) < config.min_chars:
            continue
        sentences = [tokenize(s.lower()) for s in sentence_texts]
        sentences = [s for s in sentences if s]
        if sentences:
            paragraphs.append(sentences)
    return TokenizedCorpus(paragraphs)


class Vocabulary:
    """Frequency-filtered word<->id map.

    Entries are sorted by descending count, ties broken by ascending word
    order, and the id of a word is its position in that list. ``total_tokens``
    is the full corpus token tally when built by :func:`build_vocabulary`;
    a vocabulary loaded from TSV (which cannot carry the tally) falls back to
    the sum of its stored counts.
    """

    def __init__(self, words: list[str], counts, total_tokens: int | None = None):
        if len(words) != len(counts):
            raise ValueError("words and counts length mismatch")
        if len(words) == 0:
            raise EmptyVocabularyError("vocabulary has no entries")
        self.words: list[str] = list(words)
        self.counts = np.asarray(counts, dtype=np.int64)
        if np.any(self.counts <= 0):
            raise ValueError("vocabulary counts must be positive")
        self.total_tokens = int(total_tokens if total_tokens is not None else self.counts.sum())
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValueError("duplicate word in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def id_of(self, word: str) -> int | None:
        return self._index.get(word)

    def frequencies(self) -> np.ndarray:
        """Per-id corpus frequency count(w)/total_tokens, used for subsampling."""
        return self.counts / float(self.total_tokens)

    def save(self, path: str | Path) -> None:
        """Write the TSV format: one "word<TAB>count" line per entry, in id order."""
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for word, count in zip(self.words, self.counts):
                f.write(f"{word}\t{int(count)}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        words: list[str] = []
        counts: list[int] = []
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise VocabularyFormatError(
                        f"{path}:{lineno}: expected 'word<TAB>count', got {line!r}"
                    )
                word, count_text = parts
                try:
                    count = int(count_text)
                except ValueError as exc:
                    raise VocabularyFormatError(
                        f"{path}:{lineno}: count is not an integer: {count_text!r}"
                    ) from exc
                words.append(word)
                counts.append(count)
        if not words:
            raise EmptyVocabularyError(f"vocabulary file {path} is empty")
        return cls(words, counts)


def build_vocabulary(
    corpus: TokenizedCorpus, min_count: int = 10, max_size: int = 750_000
) -> Vocabulary:
    """Count tokens and keep the ``max_size`` most frequent with count >= ``min_count``.

    Ties at the same count break by ascending word order, so the result is a
    deterministic function of the corpus.
    """
    if min_count < 1 or max_size < 1:
        raise ValueError("min_count and max_size must be >= 1")
    tally: Counter[str] = Counter()
    for sentence in corpus.sentences():
        tally.update(sentence)
    total = sum(tally.values())
    entries = sorted(
        ((w, c) for w, c in tally.items() if c >= min_count),
        key=lambda wc: (-wc[1], wc[0]),
    )[:max_size]
    if not entries:
        raise EmptyVocabularyError(
            f"no word reached min_count={min_count} (corpus has {total} tokens)"
        )
    words = [w for w, _ in entries]
    counts = [c for _, c in entries]
    return Vocabulary(words, counts, total_tokens=total)


def encode_corpus(corpus: TokenizedCorpus, vocab: Vocabulary) -> EncodedCorpus:
    """Map tokens to vocabulary ids, OOV tokens to the ``OOV_ID`` sentinel."""
    index = vocab._index
    paragraphs = [
        [
            np.fromiter(
                (index.get(tok, OOV_ID) for tok in sentence),
                dtype=np.uint32,
                count=len(sentence),
            )
            for sentence in paragraph
        ]
        for paragraph in corpus.paragraphs
    ]
    return EncodedCorpus(paragraphs)


def decode_corpus(
    encoded: EncodedCorpus, vocab: Vocabulary, oov_token: str = "<oov>"
) -> TokenizedCorpus:
    """Inverse of :func:`encode_corpus` up to OOV positions."""
    words = vocab.words
    paragraphs = [
        [[words[i] if i != OOV_ID else oov_token for i in sentence] for sentence in paragraph]
        for paragraph in encoded.paragraphs
    ]
    return TokenizedCorpus(paragraphs)


def save_corpus(corpus: TokenizedCorpus, path: str | Path) -> None:
    """Canonical corpus format: one sentence per line, single-space separated
    tokens, blank line terminating each paragraph."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for paragraph in corpus.paragraphs:
            for sentence in paragraph:
                f.write(" ".join(sentence))
                f.write("\n")
            f.write("\n")


def load_corpus(path: str | Path) -> TokenizedCorpus:
    """Read the canonical corpus format (splits are explicit, no filtering)."""
    paragraphs: list[Paragraph] = []
    current: Paragraph = []
    with open(path, "rb") as f:
        text = _decode_utf8(f.read())
    for line in text.split("\n"):
        if line.strip():
            current.append(line.split())
        elif current:
            paragraphs.append(current)
            current = []
    if current:
        paragraphs.append(current)
    return TokenizedCorpus(paragraphs)


def corpus_from_sentences(
    sentences: Iterable[Sentence], paragraph_size: int = 1
) -> TokenizedCorpus:
    """Group a flat sentence list into fixed-size paragraphs (test convenience)."""
    paragraphs: list[Paragraph] = []
    current: Paragraph = []
    for sentence in sentences:
        current.append(list(sentence))
        if len(current) == paragraph_size:
            paragraphs.append(current)
            current = []
    if current:
        paragraphs.append(current)
    return TokenizedCorpus(paragraphs)
