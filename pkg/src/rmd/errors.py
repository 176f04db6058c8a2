"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 usage/input, 3 provider, 4 internal invariant violation.
"""
from __future__ import annotations


class RMDError(Exception):
    exit_code = 4


class InvalidArgumentError(RMDError, ValueError):
    exit_code = 2


class IngestError(RMDError):
    exit_code = 2


class IndexFormatError(RMDError):
    """Malformed index file. ``line`` is 1-based when known."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaVersionError(IndexFormatError):
    pass


class ProviderError(RMDError):
    exit_code = 3

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message if key is None else f"{message} (key={key!r})")
        self.key = key


class DecompositionError(ProviderError):
    """LLM reply could not be parsed into the requested shape."""

    def __init__(self, message: str, raw_reply: str | None = None, causes=None):
        super().__init__(message)
        self.raw_reply = raw_reply
        self.causes = list(causes or [])


class ScoreModelError(RMDError):
    exit_code = 3

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class InvariantError(RMDError):
    exit_code = 4
