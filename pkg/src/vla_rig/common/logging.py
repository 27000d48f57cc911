"""Logging setup for command-line runs.

Logs always go to stderr; stdout carries the JSON summaries that commands
print on success.
"""

from __future__ import annotations

import logging
import sys

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_HANDLER_NAME = "vla-rig-stderr"


def setup_logging(level: int | str = logging.INFO) -> logging.Logger:
    """Configure the ``vla_rig`` logger hierarchy.

    Safe to call repeatedly; the stderr handler is installed once. Later
    calls change the level and point the handler at the current stderr.
    """

    logger = logging.getLogger("vla_rig")
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logger.setLevel(level)

    existing = [h for h in logger.handlers if h.get_name() == _HANDLER_NAME]
    if existing:
        # assigned directly: setStream flushes the old stream, which may be closed
        existing[0].stream = sys.stderr  # type: ignore[attr-defined]
    else:
        handler = logging.StreamHandler(sys.stderr)
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
        logger.propagate = False

    return logger


__all__ = ["LOG_FORMAT", "setup_logging"]
