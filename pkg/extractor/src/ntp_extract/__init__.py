from .extract import (
    ExtractionJob,
    ExtractionSummary,
    JobError,
    SnippetSource,
    extract,
    load_inputs,
)
from .offsets import OffsetError, offsets_to_bytes

__all__ = [
    "ExtractionJob",
    "ExtractionSummary",
    "JobError",
    "OffsetError",
    "SnippetSource",
    "extract",
    "load_inputs",
    "offsets_to_bytes",
]
