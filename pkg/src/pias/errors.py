"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: usage problems -> 1, data problems -> 2,
network/bridge problems -> 3.
"""

from __future__ import annotations


class PiasError(Exception):
    """Base class for all pipeline errors."""


class UsageError(PiasError):
    """Bad command line or config usage."""


class DataError(PiasError):
    """Input data is missing, malformed, or unusable."""


class ParseError(DataError):
    """A record could not be parsed; carries a byte offset or line number."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        where = []
        if offset is not None:
            where.append(f"byte {offset}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.offset = offset
        self.line = line


class FetchError(PiasError):
    """A remote fetch failed after retries; carries the last HTTP status."""

    def __init__(self, message: str, *, status: int | None = None):
        if status is not None:
            message = f"{message} (last status {status})"
        super().__init__(message)
        self.status = status


class NotFoundError(FetchError):
    """The requested record does not exist on the server."""


class NoEvidenceError(DataError):
    """An article has no usable abstract, so no evidence can be selected."""


class NoArticlesError(DataError):
    """An intervention has no usable articles in the current configuration."""


class GenerationError(PiasError):
    """The summary generator failed; carries the failing chunk index."""

    def __init__(self, message: str, *, chunk_index: int | None = None):
        if chunk_index is not None:
            message = f"{message} (chunk {chunk_index})"
        super().__init__(message)
        self.chunk_index = chunk_index


class NotTrainedError(PiasError):
    """A model was used before fit() or load()."""


class UndefinedMetricError(DataError):
    """A metric is undefined for the given inputs (e.g. AUC with one class)."""


class BridgeError(PiasError):
    """The sidecar bridge returned an error or broke protocol."""
