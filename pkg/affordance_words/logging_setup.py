"""Logging configuration for affordance-words."""

import copy
import logging
import sys

from .display import Colors

LOGGER_NAME = "affordance-words"


class ColoredFormatter(logging.Formatter):
    """Formatter that colours the level name, and the message from WARNING up.

    Each record is shallow-copied before modification so other handlers on
    the same logger see the original text.
    """

    def format(self, record: logging.LogRecord) -> str:
        # Looked up per call: Colors.init() may blank the codes after import.
        level_colors = {
            logging.DEBUG: Colors.DIM,
            logging.INFO: Colors.CYAN,
            logging.WARNING: Colors.YELLOW,
            logging.ERROR: Colors.RED,
            logging.CRITICAL: Colors.BG_RED + Colors.WHITE,
        }
        record = copy.copy(record)
        color = level_colors.get(record.levelno, Colors.RESET)
        record.levelname = f"{color}{record.levelname}{Colors.RESET}"
        if record.levelno >= logging.WARNING:
            record.msg = f"{color}{record.msg}{Colors.RESET}"
        return super().format(record)


def get_logger(module: str) -> logging.Logger:
    """Child logger of the package logger, e.g. ``affordance-words.hmm``."""
    return logging.getLogger(f"{LOGGER_NAME}.{module}")


def setup_logging(verbose: bool = False, quiet: bool = False) -> logging.Logger:
    """Set up the package logger.

    Args:
        verbose: Show DEBUG messages (EM iterations, file writes) with a
                 level prefix.
        quiet: Show only warnings and errors. Ignored when verbose is set.

    Returns:
        Configured package logger.
    """
    logger = logging.getLogger(LOGGER_NAME)

    # Remove existing handlers to avoid duplicates
    logger.handlers.clear()
    logger.propagate = False

    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    logger.setLevel(level)

    # stdout keeps log lines ordered with the printed result tables
    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(level)

    fmt = "%(levelname)s [%(name)s] %(message)s" if verbose else "%(message)s"
    handler.setFormatter(ColoredFormatter(fmt))

    logger.addHandler(handler)
    return logger
