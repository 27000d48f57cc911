"""Trajectory records and the JSON-lines episode store.

A dataset file starts with a header line ``{"format":"vla-episodes","version":1}``
followed by one Episode object per line. Writing the same episodes twice
produces byte-identical files.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Iterator
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from vla_rig.common.errors import FormatVersionError, InputValidationError

logger = logging.getLogger(__name__)

EPISODES_FORMAT = "vla-episodes"
EPISODES_VERSION = 1
HEADER = {"format": EPISODES_FORMAT, "version": EPISODES_VERSION}


def _check_finite(values: list[float], field_name: str) -> list[float]:
    for index, value in enumerate(values):
        if not math.isfinite(value):
            raise ValueError(f"{field_name}[{index}] is not finite")
    return values


class Step(BaseModel):
    """One observation/action pair."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    obs: list[float]
    action: list[float] = Field(min_length=1)
    is_terminal: bool = False

    @field_validator("obs")
    @classmethod
    def _finite_obs(cls, value: list[float]) -> list[float]:
        return _check_finite(value, "obs")

    @field_validator("action")
    @classmethod
    def _finite_action(cls, value: list[float]) -> list[float]:
        return _check_finite(value, "action")


class EpisodeMeta(BaseModel):
    """Curation predicates and bookkeeping carried by each episode."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    has_third_person_camera: bool = True
    single_arm_end_effector: bool = True
    success: bool | None = None
    env_seed: int | None = None
    first_transition_dropped: bool = False
    gripper_before: list[float] | None = None


class Episode(BaseModel):
    """A demonstration: instruction plus an ordered list of steps."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dataset_name: str = Field(min_length=1)
    instruction: str
    steps: list[Step] = Field(min_length=1)
    meta: EpisodeMeta = Field(default_factory=EpisodeMeta)

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def action_columns(episodes: Iterable[Episode], n_dims: int) -> list[np.ndarray]:
    """Per-dimension arrays of every step action, for codec fitting."""

    rows = [step.action for episode in episodes for step in episode.steps]
    for row in rows:
        if len(row) != n_dims:
            raise InputValidationError(f"action of length {len(row)} where {n_dims} expected")
    if not rows:
        return [np.empty(0) for _ in range(n_dims)]
    matrix = np.asarray(rows, dtype=np.float64)
    return [matrix[:, d] for d in range(n_dims)]


def write_episodes(path: Path, episodes: Iterable[Episode]) -> int:
    """Write a dataset file and return the number of episodes written."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(HEADER, separators=(",", ":")) + "\n")
        for episode in episodes:
            handle.write(episode.model_dump_json() + "\n")
            count += 1
    logger.info("Wrote %d episodes to %s", count, path)
    return count


def iter_episodes(path: Path) -> Iterator[Episode]:
    """Stream episodes from a dataset file, validating the header first."""

    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        first = handle.readline()
        try:
            header = json.loads(first) if first.strip() else None
        except json.JSONDecodeError as exc:
            raise FormatVersionError(f"{path}: header line is not JSON") from exc
        if header != HEADER:
            raise FormatVersionError(
                f"{path}: expected header {HEADER}, found {header}", found=header
            )
        for line_number, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            try:
                yield Episode.model_validate_json(line)
            except ValueError as exc:
                raise InputValidationError(f"{path}:{line_number}: invalid episode: {exc}") from exc


def read_episodes(path: Path) -> list[Episode]:
    return list(iter_episodes(path))


def count_steps(episodes: Iterable[Episode]) -> int:
    return sum(episode.n_steps for episode in episodes)


__all__ = [
    "EPISODES_FORMAT",
    "EPISODES_VERSION",
    "HEADER",
    "Episode",
    "EpisodeMeta",
    "Step",
    "action_columns",
    "count_steps",
    "iter_episodes",
    "read_episodes",
    "write_episodes",
]
