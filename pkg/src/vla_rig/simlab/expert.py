"""Scripted demonstrator for the pick-and-place world."""

from __future__ import annotations

import math

from vla_rig.simlab.world import (
    GRIPPER_CLOSE,
    GRIPPER_OPEN,
    EnvAction,
    WorldConfig,
    WorldState,
    arrived,
    current_target,
)


def _axis_command(error: float, cfg: WorldConfig) -> float:
    if abs(error) <= cfg.arrive_tol:
        return 0.0
    if abs(error) >= cfg.max_step:
        return math.copysign(cfg.max_step, error)
    return error


def scripted_expert(state: WorldState, cfg: WorldConfig | None = None) -> EnvAction:
    """Approach the object, close, carry to the goal, open.

    Movement saturates at ``max_step`` per axis. On arrival the arm stops for
    one tick to toggle the gripper.
    """

    cfg = cfg or WorldConfig()
    if arrived(state, cfg):
        return EnvAction(
            d_pos=(0.0, 0.0), gripper=GRIPPER_OPEN if state.grasped else GRIPPER_CLOSE
        )
    target = current_target(state)
    return EnvAction(
        d_pos=(
            _axis_command(target[0] - state.ee_pos[0], cfg),
            _axis_command(target[1] - state.ee_pos[1], cfg),
        ),
        gripper=GRIPPER_CLOSE if state.grasped else GRIPPER_OPEN,
    )


__all__ = ["scripted_expert"]
