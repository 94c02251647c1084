"""Utility modules."""

from .logger import DEFAULT_LOG_FORMAT, configure_root_logger, get_logger

__all__ = ["DEFAULT_LOG_FORMAT", "configure_root_logger", "get_logger"]
