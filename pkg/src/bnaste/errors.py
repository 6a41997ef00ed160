"""Exception hierarchy and structured logging shared across the toolkit."""

from __future__ import annotations

import logging
import os


class AsteError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(AsteError):
    """Input data or configuration violates a documented contract.

    Maps to exit code 1 on the command line.
    """


class CorpusFormatError(ValidationError):
    """A corpus file line could not be parsed. Carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ScorerError(AsteError):
    """A span scorer failed on a candidate interval."""

    def __init__(self, message: str, interval: tuple[int, int] | None = None):
        if interval is not None:
            message = f"interval {interval}: {message}"
        super().__init__(message)
        self.interval = interval


_LOGGER = logging.getLogger("bnaste")


def get_logger() -> logging.Logger:
    """Logger configured from the ASTE_LOG environment variable."""
    if not _LOGGER.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(message)s"))
        _LOGGER.addHandler(handler)
        level = os.environ.get("ASTE_LOG", "INFO").upper()
        _LOGGER.setLevel(getattr(logging, level, logging.INFO))
    return _LOGGER


def log_kv(stage: str, **fields) -> None:
    """Emit one machine-parsable ``stage=... key=value`` log line."""
    parts = [f"stage={stage}"] + [f"{k}={v}" for k, v in fields.items()]
    get_logger().info(" ".join(parts))
