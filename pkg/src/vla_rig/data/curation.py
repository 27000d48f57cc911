"""Dataset curation filters.

Filters are pure functions over episodes; none of them reorders surviving
steps or episodes. ``curate`` chains the enabled filters in a fixed order
(gate, failed replays, first transition, no-ops) and reports what each one
removed.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vla_rig.common.errors import InputValidationError
from vla_rig.data.episodes import Episode, count_steps

logger = logging.getLogger(__name__)

DimensionRole = Literal["translation", "rotation", "gripper"]

DEFAULT_LAYOUT: tuple[DimensionRole, ...] = (
    "translation",
    "translation",
    "translation",
    "rotation",
    "rotation",
    "rotation",
    "gripper",
)


class NoOpThresholds(BaseModel):
    """Magnitudes below which a step counts as doing nothing."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps_translation: float = Field(default=1e-4, ge=0.0)
    eps_rotation: float = Field(default=1e-4, ge=0.0)
    eps_gripper: float = Field(default=1e-4, ge=0.0)


def curation_gate(episode: Episode) -> bool:
    """Keep only single-arm end-effector episodes with a third-person camera."""
    return episode.meta.has_third_person_camera and episode.meta.single_arm_end_effector


def _role_indices(layout: Sequence[str], n_dims: int) -> dict[str, list[int]]:
    if len(layout) != n_dims:
        raise InputValidationError(
            f"dimension layout covers {len(layout)} dims but actions have {n_dims}"
        )
    indices: dict[str, list[int]] = {"translation": [], "rotation": [], "gripper": []}
    for index, role in enumerate(layout):
        if role not in indices:
            raise InputValidationError(f"unknown dimension role {role!r} at index {index}")
        indices[role].append(index)
    return indices


def filter_noops(
    episode: Episode,
    th: NoOpThresholds | None = None,
    layout: Sequence[DimensionRole] = DEFAULT_LAYOUT,
) -> Episode | None:
    """Remove steps that neither move the arm nor change the gripper.

    The gripper is compared with the last retained step. The first step is
    compared with ``meta.gripper_before`` when present, otherwise with itself.
    When leading steps are removed, the gripper reference in force at the
    first survivor is recorded in ``meta.gripper_before`` so that filtering
    the output again changes nothing.

    Returns ``None`` when every step is a no-op.
    """

    th = th or NoOpThresholds()
    roles = _role_indices(layout, len(episode.steps[0].action))

    reference: np.ndarray | None = (
        np.asarray(episode.meta.gripper_before, dtype=np.float64)
        if episode.meta.gripper_before is not None
        else None
    )
    kept = []
    first_reference: np.ndarray | None = None
    for step in episode.steps:
        action = np.asarray(step.action, dtype=np.float64)
        if action.size != len(layout):
            raise InputValidationError(
                f"step action has {action.size} dims, layout covers {len(layout)}"
            )
        gripper = action[roles["gripper"]]
        if reference is None:
            reference = gripper
        translation = float(np.linalg.norm(action[roles["translation"]]))
        rotation = float(np.linalg.norm(action[roles["rotation"]]))
        gripper_delta = float(np.max(np.abs(gripper - reference), initial=0.0))
        is_noop = (
            translation < th.eps_translation
            and rotation < th.eps_rotation
            and gripper_delta < th.eps_gripper
        )
        if is_noop:
            continue
        if not kept:
            first_reference = reference
        kept.append(step)
        reference = gripper

    if not kept:
        return None
    if len(kept) == len(episode.steps):
        return episode

    meta = episode.meta
    if kept[0] is not episode.steps[0] and first_reference is not None:
        meta = meta.model_copy(update={"gripper_before": [float(v) for v in first_reference]})
    return episode.model_copy(update={"steps": kept, "meta": meta})


def drop_first_transition(episode: Episode) -> Episode | None:
    """Drop the first step once; ``None`` when nothing is left.

    The episode is marked so a second application is a no-op.
    """

    if episode.meta.first_transition_dropped:
        return episode
    remaining = episode.steps[1:]
    if not remaining:
        return None
    meta = episode.meta.model_copy(update={"first_transition_dropped": True})
    return episode.model_copy(update={"steps": remaining, "meta": meta})


@dataclass(frozen=True)
class ReplayFilterResult:
    episodes: list[Episode]
    removed: int
    warnings: list[str] = field(default_factory=list)


def filter_failed_replays(
    episodes: Sequence[Episode], success_flags: Sequence[bool]
) -> ReplayFilterResult:
    """Keep only episodes whose replay (or recorded outcome) succeeded."""

    if len(episodes) != len(success_flags):
        raise InputValidationError(
            f"{len(episodes)} episodes but {len(success_flags)} success flags"
        )
    kept = [ep for ep, ok in zip(episodes, success_flags, strict=True) if ok]
    removed = len(episodes) - len(kept)
    warnings = []
    if episodes and not kept:
        warnings.append("every episode failed replay; dataset is now empty")
        logger.warning("All %d episodes failed replay", len(episodes))
    return ReplayFilterResult(episodes=kept, removed=removed, warnings=warnings)


@dataclass(frozen=True)
class FilterCount:
    name: str
    episodes_removed: int
    steps_removed: int


@dataclass(frozen=True)
class CurationSummary:
    episodes_in: int
    steps_in: int
    episodes_out: int
    steps_out: int
    filters: list[FilterCount]
    warnings: list[str]

    def as_dict(self) -> dict[str, object]:
        return asdict(self)


class CurationOptions(BaseModel):
    """Which filters ``curate`` applies."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gate: bool = True
    failed_replays: bool = False
    drop_first: bool = False
    noops: bool = False
    thresholds: NoOpThresholds = Field(default_factory=NoOpThresholds)
    layout: tuple[DimensionRole, ...] = DEFAULT_LAYOUT


def curate(
    episodes: Sequence[Episode],
    options: CurationOptions | None = None,
    success_flags: Sequence[bool] | None = None,
) -> tuple[list[Episode], CurationSummary]:
    """Apply the enabled filters and count what each removed.

    ``success_flags`` default to ``meta.success`` (missing counts as failed)
    when the failed-replay filter is enabled.
    """

    options = options or CurationOptions()
    current = list(episodes)
    counts: list[FilterCount] = []
    warnings: list[str] = []

    def record(name: str, before: list[Episode], after: list[Episode]) -> None:
        counts.append(
            FilterCount(
                name=name,
                episodes_removed=len(before) - len(after),
                steps_removed=count_steps(before) - count_steps(after),
            )
        )
        logger.info("%s removed %d episodes", name, len(before) - len(after))

    if options.gate:
        after = [ep for ep in current if curation_gate(ep)]
        record("curation_gate", current, after)
        current = after

    if options.failed_replays:
        if success_flags is None:
            flags = [bool(ep.meta.success) for ep in current]
        else:
            if len(success_flags) != len(episodes):
                raise InputValidationError(
                    f"{len(episodes)} episodes but {len(success_flags)} success flags"
                )
            by_identity = {id(ep): ok for ep, ok in zip(episodes, success_flags, strict=True)}
            flags = [by_identity[id(ep)] for ep in current]
        result = filter_failed_replays(current, flags)
        record("failed_replays", current, result.episodes)
        warnings.extend(result.warnings)
        current = result.episodes

    if options.drop_first:
        after = [ep for ep in map(drop_first_transition, current) if ep is not None]
        record("drop_first_transition", current, after)
        current = after

    if options.noops:
        after = [
            ep
            for ep in (filter_noops(e, options.thresholds, options.layout) for e in current)
            if ep is not None
        ]
        record("noops", current, after)
        current = after

    summary = CurationSummary(
        episodes_in=len(episodes),
        steps_in=count_steps(episodes),
        episodes_out=len(current),
        steps_out=count_steps(current),
        filters=counts,
        warnings=warnings,
    )
    return current, summary


__all__ = [
    "DEFAULT_LAYOUT",
    "CurationOptions",
    "CurationSummary",
    "DimensionRole",
    "FilterCount",
    "NoOpThresholds",
    "ReplayFilterResult",
    "curate",
    "curation_gate",
    "drop_first_transition",
    "filter_failed_replays",
    "filter_noops",
]
