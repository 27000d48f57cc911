"""Append-only JSON-lines logs."""

from __future__ import annotations

import json
import threading
from collections.abc import Iterator, Mapping
from pathlib import Path
from typing import Any


class JsonlLog:
    """Append-only JSON-lines log file.

    Each ``append`` writes exactly one compact JSON object followed by a
    newline, so partially written runs remain readable line by line. Appends
    are serialised with a lock; several rollout threads may share one log.

    Example:
        log = JsonlLog(Path("artifacts/trajectories.jsonl"))
        log.append({"trial": 0, "tick": 3, "action": [0.05, 0.0]})
        entries = log.read_all()
    """

    def __init__(self, log_path: Path):
        self.log_path = Path(log_path)
        self._lock = threading.Lock()
        self.log_path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, entry: Mapping[str, Any]) -> None:
        line = json.dumps(entry, separators=(",", ":"), default=str)
        with self._lock, self.log_path.open("a", encoding="utf-8") as handle:
            handle.write(line + "\n")

    def extend(self, entries: list[Mapping[str, Any]]) -> None:
        lines = "".join(
            json.dumps(entry, separators=(",", ":"), default=str) + "\n" for entry in entries
        )
        with self._lock, self.log_path.open("a", encoding="utf-8") as handle:
            handle.write(lines)

    def __iter__(self) -> Iterator[dict[str, Any]]:
        if not self.log_path.exists():
            return
        with self.log_path.open(encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    yield json.loads(line)

    def read_all(self) -> list[dict[str, Any]]:
        return list(self)

    def clear(self) -> None:
        with self._lock:
            self.log_path.write_text("", encoding="utf-8")


__all__ = ["JsonlLog"]
