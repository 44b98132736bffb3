"""Base exception and exit-code taxonomy shared by every stage."""

from enum import IntEnum


class ExitCode(IntEnum):
    SUCCESS = 0
    UNEXPECTED = 1
    CONFIG = 2
    INGESTION = 3
    SEGMENTATION = 4
    PATCHES = 5
    EMBEDDER = 6
    FITTING = 7
    BUNDLE = 8
    EVALUATION = 9


class WriterIdError(Exception):
    """Raised by any pipeline stage; carries the process exit code of its failure class."""

    exit_code = ExitCode.UNEXPECTED


class DimensionError(WriterIdError, ValueError):
    """Raised when array shapes or lengths do not agree."""


class ParameterError(WriterIdError, ValueError):
    """Raised when a numeric parameter lies outside its documented range."""
