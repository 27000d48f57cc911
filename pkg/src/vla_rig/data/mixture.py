"""Weighted multi-dataset mixture sampling.

Draw ``i`` for seed ``s`` uses two uniforms taken from row ``i % 4096`` of a
block generated by ``numpy.random.default_rng([s, i // 4096])``. A draw is
therefore a pure function of (spec, dataset sizes, progress, seed, index)
and can be recomputed in any order or process. The first uniform picks the
dataset by inverse CDF over the active weights, the second picks an episode
uniformly within it.

With a removal schedule, once ``progress >= removal.at_fraction`` the
removed dataset gets probability zero and its weight is spread over the
remaining datasets in proportion to their own weights.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from vla_rig.common.errors import ConfigurationError, InputValidationError
from vla_rig.data.episodes import Episode, count_steps

logger = logging.getLogger(__name__)

DRAW_BLOCK = 4096
WEIGHT_TOLERANCE = 1e-9


class MixtureConfigurationError(ConfigurationError):
    """Raised when a mixture cannot produce any draw."""


class MixtureEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dataset_name: str = Field(min_length=1)
    weight: float = Field(ge=0.0, le=1.0)


class Removal(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dataset_name: str = Field(min_length=1)
    at_fraction: float = Field(gt=0.0, lt=1.0)


class MixtureSpec(BaseModel):
    """Named datasets with sampling weights and an optional removal schedule.

    Weights are normalised to sum to one on construction; ``raw_weights``
    keeps the values as written.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    entries: tuple[MixtureEntry, ...] = Field(min_length=1)
    removal: Removal | None = None
    raw_weights: tuple[float, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _normalise(cls, data: object) -> object:
        if not isinstance(data, Mapping) or "entries" not in data:
            return data
        entries = [dict(e) for e in data["entries"]]
        raw = [float(e["weight"]) for e in entries]
        total = sum(raw)
        if total <= 0:
            raise ValueError("mixture weights sum to zero")
        normalised = [{**e, "weight": w / total} for e, w in zip(entries, raw, strict=True)]
        return {**data, "entries": normalised, "raw_weights": data.get("raw_weights") or raw}

    @model_validator(mode="after")
    def _check_names(self) -> MixtureSpec:
        names = [e.dataset_name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("dataset names in a mixture must be unique")
        if self.removal is not None and self.removal.dataset_name not in names:
            raise ValueError(f"removal names unknown dataset {self.removal.dataset_name!r}")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError("normalised weights do not sum to 1")
        return self

    @property
    def names(self) -> list[str]:
        return [e.dataset_name for e in self.entries]

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries], dtype=np.float64)


def active_weights(spec: MixtureSpec, progress: float) -> np.ndarray:
    """Weights in force at ``progress``; sums to 1."""

    if not 0.0 <= progress <= 1.0:
        raise InputValidationError(f"progress must lie in [0, 1], got {progress}")
    weights = spec.weights.copy()
    if spec.removal is not None and progress >= spec.removal.at_fraction:
        weights[spec.names.index(spec.removal.dataset_name)] = 0.0
    total = weights.sum()
    if total <= 0:
        raise MixtureConfigurationError("all mixture weights are zero under the active schedule")
    return weights / total


@dataclass(frozen=True)
class MixtureDraw:
    """Reference to one sampled episode."""

    draw_index: int
    dataset_name: str
    episode_index: int

    def resolve(self, datasets: Mapping[str, Sequence[Episode]]) -> Episode:
        return datasets[self.dataset_name][self.episode_index]


def _check_sizes(spec: MixtureSpec, sizes: Mapping[str, int], weights: np.ndarray) -> np.ndarray:
    counts = np.array([int(sizes.get(name, 0)) for name in spec.names], dtype=np.int64)
    empty = [n for n, c, w in zip(spec.names, counts, weights, strict=True) if w > 0 and c <= 0]
    if empty:
        raise InputValidationError(f"datasets with positive weight but no episodes: {empty}")
    return counts


def _uniform_block(rng_seed: int, block: int) -> np.ndarray:
    return np.random.default_rng([rng_seed, block]).random((DRAW_BLOCK, 2))


def draw_batch(
    spec: MixtureSpec,
    sizes: Mapping[str, int],
    progress: float,
    rng_seed: int,
    start: int = 0,
    count: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Dataset and episode indices for draws ``start .. start + count - 1``.

    Identical to calling ``sample_mixture`` once per index.
    """

    if rng_seed < 0 or start < 0 or count < 0:
        raise InputValidationError("rng_seed, start and count must be non-negative")
    weights = active_weights(spec, progress)
    counts = _check_sizes(spec, sizes, weights)

    active = np.flatnonzero(weights > 0)
    cumulative = np.cumsum(weights[active])
    cumulative[-1] = 1.0

    uniforms = np.empty((count, 2), dtype=np.float64)
    stop = start + count
    position = start
    while position < stop:
        block, row = divmod(position, DRAW_BLOCK)
        take = min(DRAW_BLOCK - row, stop - position)
        uniforms[position - start : position - start + take] = _uniform_block(rng_seed, block)[
            row : row + take
        ]
        position += take

    chosen = active[np.searchsorted(cumulative, uniforms[:, 0], side="right")]
    episode_index = np.minimum(
        np.floor(uniforms[:, 1] * counts[chosen]).astype(np.int64), counts[chosen] - 1
    )
    return chosen, episode_index


def sample_mixture(
    spec: MixtureSpec,
    datasets: Mapping[str, Sequence[Episode]],
    progress: float,
    rng_seed: int,
    draw_index: int = 0,
) -> MixtureDraw:
    """Draw one episode reference from the mixture."""

    sizes = {name: len(episodes) for name, episodes in datasets.items()}
    chosen, episode_index = draw_batch(spec, sizes, progress, rng_seed, draw_index, 1)
    return MixtureDraw(
        draw_index=draw_index,
        dataset_name=spec.names[int(chosen[0])],
        episode_index=int(episode_index[0]),
    )


@dataclass(frozen=True)
class MixtureRow:
    dataset_name: str
    episodes: int
    steps: int
    raw_weight: float
    weight: float
    weight_after_removal: float
    removed: bool


@dataclass(frozen=True)
class MixtureReport:
    rows: list[MixtureRow]
    total_weight: float
    total_weight_after_removal: float
    normalized: bool
    removal: dict[str, object] | None
    warnings: list[str]

    def as_dict(self) -> dict[str, object]:
        return asdict(self)

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows]).set_index("dataset_name")


def mixture_report(
    spec: MixtureSpec, datasets: Mapping[str, Sequence[Episode]] | None = None
) -> MixtureReport:
    """Per-dataset counts and effective weights before and after removal."""

    datasets = datasets or {}
    pre = spec.weights
    if spec.removal is not None:
        post = active_weights(spec, spec.removal.at_fraction)
    else:
        post = pre.copy()

    rows = []
    warnings = []
    for i, entry in enumerate(spec.entries):
        episodes = datasets.get(entry.dataset_name, ())
        if entry.weight > 0 and not episodes:
            warnings.append(
                f"dataset {entry.dataset_name!r} has weight {entry.weight:.4f} but no episodes"
            )
        rows.append(
            MixtureRow(
                dataset_name=entry.dataset_name,
                episodes=len(episodes),
                steps=count_steps(episodes),
                raw_weight=spec.raw_weights[i] if spec.raw_weights else entry.weight,
                weight=float(pre[i]),
                weight_after_removal=float(post[i]),
                removed=spec.removal is not None
                and spec.removal.dataset_name == entry.dataset_name,
            )
        )

    total = float(pre.sum())
    total_post = float(post.sum())
    return MixtureReport(
        rows=rows,
        total_weight=total,
        total_weight_after_removal=total_post,
        normalized=abs(total - 1.0) <= WEIGHT_TOLERANCE
        and abs(total_post - 1.0) <= WEIGHT_TOLERANCE,
        removal=spec.removal.model_dump() if spec.removal else None,
        warnings=warnings,
    )


def load_mixture_spec(path: Path) -> MixtureSpec:
    """Load a MixtureSpec from a JSON or YAML file."""

    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"Cannot read mixture spec {path}: {exc}") from exc
    if isinstance(data, Mapping):
        data = {k: v for k, v in data.items() if k in ("entries", "removal")}
    try:
        return MixtureSpec.model_validate(data)
    except (ValidationError, ValueError) as exc:
        raise ConfigurationError(f"Invalid mixture spec {path}: {exc}") from exc


__all__ = [
    "DRAW_BLOCK",
    "MixtureConfigurationError",
    "MixtureDraw",
    "MixtureEntry",
    "MixtureReport",
    "MixtureRow",
    "MixtureSpec",
    "Removal",
    "active_weights",
    "draw_batch",
    "load_mixture_spec",
    "mixture_report",
    "sample_mixture",
]
