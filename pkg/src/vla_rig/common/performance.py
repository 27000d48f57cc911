"""Timing helpers."""

from __future__ import annotations

import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

logger = logging.getLogger(__name__)


@dataclass
class Stopwatch:
    """Elapsed wall-clock seconds, filled in when the timed block exits."""

    name: str
    started: float = 0.0
    elapsed: float = 0.0


@contextmanager
def timer(operation_name: str) -> Iterator[Stopwatch]:
    """Context manager for timing operations.

    The elapsed time is logged at INFO and kept on the yielded stopwatch, also
    when the block raises.
    """
    watch = Stopwatch(operation_name, started=time.perf_counter())
    try:
        yield watch
    finally:
        watch.elapsed = time.perf_counter() - watch.started
        logger.info("⏱️  %s: %.3fs", operation_name, watch.elapsed)


__all__ = ["Stopwatch", "timer"]
