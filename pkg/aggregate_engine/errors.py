"""
errors.py — Exception hierarchy shared by every stage of the pipeline.
Each family maps to one CLI exit code (see main.py).
"""


class AggregateEngineError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 2


class UsageError(AggregateEngineError):
    """Bad command-line usage (exit 1)."""

    exit_code = 1


class DataError(AggregateEngineError):
    """Invalid input data, violated preconditions, unusable files (exit 2)."""

    exit_code = 2

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ModelFileError(DataError):
    """Model file that cannot be parsed or has an unsupported format_version."""

    def __init__(self, message: str, offset: int | None = None,
                 version: object | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
        self.version = version


class NumericalError(AggregateEngineError):
    """Training or prediction produced non-finite numbers (exit 3)."""

    exit_code = 3
