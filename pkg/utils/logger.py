"""
Logging utility for the fairness remediation engine
Every module logs through setup_logger(__name__); the CLI can change the
level of all of them at once with set_level
"""
import logging
import sys
from typing import Optional, Set, Union

from config.config import LOG_FORMAT, LOG_DATE_FORMAT, LOG_LEVEL

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

# Names of the loggers created by setup_logger
_configured: Set[str] = set()


def parse_level(level: Union[int, str, None]) -> int:
    """
    Logging level from a name ("debug", "INFO") or a number

    Unknown names fall back to INFO.
    """
    if level is None:
        level = LOG_LEVEL
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    return value if isinstance(value, int) else logging.INFO


def setup_logger(name: str, level: Optional[int] = None) -> logging.Logger:
    """
    Setup and configure logger with consistent formatting

    Args:
        name: Logger name (typically __name__ of the module)
        level: Logging level (default: MINDIFF_LOG_LEVEL, else INFO)

    Returns:
        Configured logger instance
    """
    level = parse_level(level)
    logger = logging.getLogger(name)
    logger.setLevel(level)
    _configured.add(name)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT))
    logger.addHandler(handler)

    return logger


def set_level(level: Union[int, str]) -> int:
    """
    Apply one level to every logger created through setup_logger

    Returns:
        The numeric level applied
    """
    value = parse_level(level)
    for name in _configured:
        logging.getLogger(name).setLevel(value)
    return value
