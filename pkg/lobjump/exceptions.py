"""
Exception hierarchy for the price-jump pipeline.

Every error raised on purpose by the package derives from LobJumpError so the
application can turn it into a one-line result envelope.
"""

from typing import Optional


class LobJumpError(Exception):
    """Base exception for pipeline errors."""
    pass


class MalformedEventError(LobJumpError):
    """Exception raised when an event cannot be applied to the book."""

    def __init__(self, seq: int, message: str):
        self.seq = seq
        super().__init__(f"seq {seq}: {message}")


class DataFormatError(LobJumpError):
    """Exception raised for unparseable or out-of-domain input rows."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDepthError(LobJumpError):
    """Exception raised when a book side cannot serve a request."""
    pass


class InsufficientDataError(LobJumpError):
    """Exception raised when a fit or score lacks rows or one of the classes."""

    def __init__(self, message: str, n_pos: Optional[int] = None, n_neg: Optional[int] = None):
        self.n_pos = n_pos
        self.n_neg = n_neg
        if n_pos is not None and n_neg is not None:
            message = f"{message} (positives={n_pos}, negatives={n_neg})"
        super().__init__(message)


class ConfigError(LobJumpError):
    """Exception raised for invalid or unsatisfiable configuration."""
    pass


class StageInputMissingError(LobJumpError):
    """Exception raised when a stage artifact has not been produced yet."""

    def __init__(self, artifact: str, stage: str):
        self.artifact = artifact
        self.stage = stage
        super().__init__(f"missing {artifact}: run stage {stage} first")


class ConvergenceWarning(UserWarning):
    """Warning issued when a solver stops before meeting its tolerances."""
    pass
