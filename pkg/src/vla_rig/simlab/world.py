"""Planar pick-and-place world.

A point end effector moves in ``[-workspace, workspace]^2``. Closing the
gripper within ``grasp_radius`` of the object grasps it; a grasped object
follows the end effector; opening the gripper releases it. The task is
solved once the object rests within ``goal_radius`` of the goal.

Actions are 7-dimensional, ``[dx, dy, dz, r1, r2, r3, gripper]``; only
``dx``, ``dy`` and ``gripper`` affect the world.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from vla_rig.common.errors import InputValidationError

Vec2 = tuple[float, float]

ACTION_DIM = 7
OBS_DIM = 6
GRIPPER_CLOSE = 1.0
GRIPPER_OPEN = -1.0
GRIPPER_THRESHOLD = 0.5
DEFAULT_INSTRUCTION = "pick up the block and place it on the goal"


class WorldConfig(BaseModel):
    """Geometry and timing of the world. Distances in metres."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_step: float = Field(default=0.05, gt=0.0)
    grasp_radius: float = Field(default=0.05, gt=0.0)
    goal_radius: float = Field(default=0.1, gt=0.0)
    arrive_tol: float = Field(default=0.025, gt=0.0)
    idle_eps: float = Field(default=1e-3, gt=0.0)
    cue_gain: float = Field(default=8.0, gt=0.0)
    workspace: float = Field(default=1.0, gt=0.0)
    grid_extent: float = Field(default=0.8, gt=0.0)
    min_separation: float = Field(default=0.2, ge=0.0)
    t_max: int = Field(default=200, ge=1)
    control_hz: float = Field(default=5.0, gt=0.0)
    freeze_patience: int = Field(default=5, ge=1)
    instruction: str = DEFAULT_INSTRUCTION

    @model_validator(mode="after")
    def _check_geometry(self) -> WorldConfig:
        if self.grid_extent > self.workspace:
            raise ValueError("grid_extent must not exceed workspace")
        if self.arrive_tol >= self.max_step:
            raise ValueError("arrive_tol must be smaller than max_step")
        return self

    @property
    def grid_cells(self) -> int:
        return int(math.floor(self.grid_extent / self.max_step + 1e-9))


@dataclass(frozen=True)
class WorldState:
    ee_pos: Vec2
    obj_pos: Vec2
    goal_pos: Vec2
    grasped: bool = False
    tick: int = 0
    last_move: Vec2 = (0.0, 0.0)


@dataclass(frozen=True)
class EnvAction:
    d_pos: Vec2
    rot: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gripper: float = GRIPPER_OPEN

    def flatten(self) -> list[float]:
        return [self.d_pos[0], self.d_pos[1], 0.0, *self.rot, self.gripper]

    @classmethod
    def from_vector(cls, vector: Sequence[float] | np.ndarray) -> EnvAction:
        values = [float(v) for v in np.asarray(vector, dtype=np.float64).ravel()]
        if len(values) != ACTION_DIM:
            raise InputValidationError(f"actions have {ACTION_DIM} entries, got {len(values)}")
        return cls(
            d_pos=(values[0], values[1]),
            rot=(values[3], values[4], values[5]),
            gripper=values[6],
        )


def _distance(a: Vec2, b: Vec2) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _sample_cell(rng: np.random.Generator, cfg: WorldConfig) -> Vec2:
    cells = cfg.grid_cells
    ix, iy = rng.integers(-cells, cells + 1, size=2)
    return (float(ix) * cfg.max_step, float(iy) * cfg.max_step)


def reset(seed: int, cfg: WorldConfig | None = None) -> WorldState:
    """Initial state for ``seed``; positions lie on a ``max_step`` grid."""

    cfg = cfg or WorldConfig()
    rng = np.random.default_rng(seed)
    ee = _sample_cell(rng, cfg)
    obj = _sample_cell(rng, cfg)
    while _distance(obj, ee) < cfg.min_separation:
        obj = _sample_cell(rng, cfg)
    goal = _sample_cell(rng, cfg)
    while _distance(goal, obj) < cfg.min_separation:
        goal = _sample_cell(rng, cfg)
    return WorldState(ee_pos=ee, obj_pos=obj, goal_pos=goal)


def _clamp(value: float, bound: float) -> float:
    if math.isnan(value):
        return 0.0
    return min(max(value, -bound), bound)


def step(state: WorldState, action: EnvAction, cfg: WorldConfig | None = None) -> WorldState:
    """Advance one tick. Inputs are clamped, never rejected."""

    cfg = cfg or WorldConfig()
    dx = _clamp(action.d_pos[0], cfg.max_step)
    dy = _clamp(action.d_pos[1], cfg.max_step)
    ee = (
        _clamp(state.ee_pos[0] + dx, cfg.workspace),
        _clamp(state.ee_pos[1] + dy, cfg.workspace),
    )
    moved = (ee[0] - state.ee_pos[0], ee[1] - state.ee_pos[1])

    grasped = state.grasped
    obj = ee if grasped else state.obj_pos
    closing = not math.isnan(action.gripper) and action.gripper >= GRIPPER_THRESHOLD
    if closing and not grasped and _distance(obj, ee) <= cfg.grasp_radius:
        grasped = True
        obj = ee
    elif not closing and grasped:
        grasped = False

    return replace(
        state, ee_pos=ee, obj_pos=obj, grasped=grasped, tick=state.tick + 1, last_move=moved
    )


def delivered(state: WorldState, cfg: WorldConfig | None = None) -> bool:
    cfg = cfg or WorldConfig()
    return not state.grasped and _distance(state.obj_pos, state.goal_pos) <= cfg.goal_radius


def current_target(state: WorldState) -> Vec2:
    return state.goal_pos if state.grasped else state.obj_pos


def arrived(state: WorldState, cfg: WorldConfig | None = None) -> bool:
    cfg = cfg or WorldConfig()
    target = current_target(state)
    return (
        max(abs(target[0] - state.ee_pos[0]), abs(target[1] - state.ee_pos[1])) <= cfg.arrive_tol
    )


def observe(state: WorldState, cfg: WorldConfig | None = None) -> np.ndarray:
    """``[heading_x, heading_y, grasped, idle, at_object, at_goal]``.

    Heading points at the object, or at the goal while grasping, in units of
    ``max_step`` clipped to [-1, 1]. Cue entries are ``cue_gain`` when active.
    """

    cfg = cfg or WorldConfig()
    target = current_target(state)
    heading = np.clip(
        [
            (target[0] - state.ee_pos[0]) / cfg.max_step,
            (target[1] - state.ee_pos[1]) / cfg.max_step,
        ],
        -1.0,
        1.0,
    )
    at_target = arrived(state, cfg)
    idle = not state.grasped and max(abs(state.last_move[0]), abs(state.last_move[1])) < (
        cfg.idle_eps
    )
    return np.array(
        [
            heading[0],
            heading[1],
            1.0 if state.grasped else 0.0,
            cfg.cue_gain if idle else 0.0,
            cfg.cue_gain if at_target and not state.grasped else 0.0,
            cfg.cue_gain if at_target and state.grasped else 0.0,
        ],
        dtype=np.float64,
    )


__all__ = [
    "ACTION_DIM",
    "DEFAULT_INSTRUCTION",
    "GRIPPER_CLOSE",
    "GRIPPER_OPEN",
    "GRIPPER_THRESHOLD",
    "OBS_DIM",
    "EnvAction",
    "Vec2",
    "WorldConfig",
    "WorldState",
    "arrived",
    "current_target",
    "delivered",
    "observe",
    "reset",
    "step",
]
