"""Logging utilities.

Provides consistent logging configuration across the solver, plus a
wall-clock timer for the expensive phases of a run (time loop, adaptation).
"""

import logging
import sys
import time
from contextlib import contextmanager
from typing import Iterator, Optional

from ..config import settings

# Default log format used across the application
DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """Get logger instance.

    Args:
        name: Logger name (typically __name__)
        level: Log level override (defaults to settings.log_level)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Only configure if not already configured
    if not logger.handlers:
        numeric_level = getattr(logging, (level or settings.log_level).upper())
        logger.setLevel(numeric_level)

        handler = logging.StreamHandler(sys.stdout)
        handler.setLevel(numeric_level)
        handler.setFormatter(logging.Formatter(DEFAULT_LOG_FORMAT))
        logger.addHandler(handler)

    return logger


def configure_root_logger(
    level: Optional[str] = None,
    format_string: Optional[str] = None,
) -> None:
    """Configure the root logger.

    Args:
        level: Log level (defaults to settings.log_level)
        format_string: Log format string (defaults to standard format)
    """
    level = level or settings.log_level
    format_string = format_string or DEFAULT_LOG_FORMAT

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=format_string,
        handlers=[logging.StreamHandler(sys.stdout)],
    )


@contextmanager
def log_elapsed(
    logger: logging.Logger, label: str, level: int = logging.INFO
) -> Iterator[None]:
    """Log the wall-clock time spent inside the block, also when it raises."""
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.log(level, "%s took %.3fs", label, time.perf_counter() - start)
