"""Exception hierarchy shared by every toolkit module."""

from __future__ import annotations

from typing import Sequence


class UTGError(Exception):
    """Base class for toolkit errors."""


class ParameterError(UTGError, ValueError):
    pass


class TimeRangeError(UTGError, ValueError):
    pass


class StreamValidationError(UTGError, ValueError):
    """Raised when events violate t_start <= t_end or carry negative ids."""

    def __init__(self, message: str, indices: Sequence[int] = ()):
        super().__init__(message)
        self.indices = list(indices)


class EmptyStreamError(StreamValidationError):
    pass


class CsvParseError(UTGError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SplitError(UTGError, ValueError):
    pass


class SurpriseError(UTGError, ZeroDivisionError):
    pass


class CoverageError(UTGError, ValueError):
    pass


class ProtocolError(UTGError, RuntimeError):
    pass


class LeakageError(ProtocolError):
    pass


class ScoreValidationError(UTGError, ValueError):
    pass


class TrainingError(UTGError, RuntimeError):
    pass
