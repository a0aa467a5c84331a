"""Export word-level vectors from pretrained transformers into the x2static
teacher-stream format, with a stream/corpus consistency checker."""

__version__ = "0.1.0"

from .export import AlignmentError, ExportConfig, ExportReport, export_teacher_stream
from .formats import OOV_ID, FormatError, Record, StreamWriter, read_stream
from .verify import VerifyReport, verify_stream
