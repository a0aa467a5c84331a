"""Exception types shared across the toolchain.

Data/format problems raise subclasses of :class:`X2StaticError` so the CLI can
map them to exit code 2; programming-contract violations raise plain
ValueError/TypeError as usual.
"""


class X2StaticError(Exception):
    """Base class for data and format errors produced by this package."""


class CorpusDecodeError(X2StaticError):
    """Raw corpus bytes are not valid UTF-8.

    Carries the byte offset of the first undecodable byte.
    """

    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"invalid UTF-8 at byte offset {offset}: {reason}")


class EmptyVocabularyError(X2StaticError):
    """min-count/max-size filtering left no vocabulary entries."""


class VocabularyFormatError(X2StaticError):
    """A vocabulary TSV file violates the word<TAB>count format."""


class StreamFormatError(X2StaticError):
    """Teacher stream bytes violate the declared layout (magic, dim, dtype, ...)."""


class StreamTruncationError(X2StaticError):
    """Teacher stream ended mid-record; names the offending record index."""

    def __init__(self, record_index: int, detail: str = ""):
        self.record_index = record_index
        msg = f"stream truncated in record {record_index}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class PlantedCoverageError(X2StaticError):
    """A token has no row in the planted space (planted-mode mock teacher)."""


class EmptyContext(X2StaticError):
    """A target has no usable context token; callers skip the example."""


class SamplingError(X2StaticError):
    """Negative sampling cannot proceed (e.g. single-word vocabulary)."""


class NonFiniteGradientError(X2StaticError):
    """A NaN/inf gradient reached the optimizer."""

    def __init__(self, row_id: int, batch_index: int | None = None):
        self.row_id = row_id
        self.batch_index = batch_index
        where = f"row {row_id}"
        if batch_index is not None:
            where += f", batch {batch_index}"
        super().__init__(f"non-finite gradient ({where})")


class EmptyTrainingSetError(X2StaticError):
    """No training example survived subsampling/OOV/context filtering."""


class AseEmptyError(X2StaticError):
    """No vocabulary word was ever seen in the stream."""


class ZeroVectorError(X2StaticError):
    """Cosine similarity is undefined for a zero-norm vector."""


class ConstantInputError(X2StaticError):
    """Spearman's rho is undefined when one side is constant."""


class InsufficientCoverageError(X2StaticError):
    """Fewer than two dataset pairs could be scored."""

    def __init__(self, scored: int, total: int):
        self.scored = scored
        self.total = total
        super().__init__(
            f"only {scored} of {total} pairs scored; need at least 2 for Spearman"
        )


class DatasetFormatError(X2StaticError):
    """A word-similarity dataset file could not be parsed."""


class EmbeddingFormatError(X2StaticError):
    """An embedding file violates the text or binary checkpoint layout."""


class OovQueryError(X2StaticError):
    """A nearest-neighbor query word is not in the vocabulary."""

    def __init__(self, word: str):
        self.word = word
        super().__init__(f"query word not in vocabulary: {word!r}")
