"""Closed-loop rollouts under blocking and non-blocking control.

Blocking control advances the world exactly one tick per prediction, so the
policy's speed has no influence on the trajectory. Non-blocking control
keeps the world running at ``control_hz`` while a prediction is computed:
a prediction that takes ``L`` seconds is executed for
``max(1, round(L * control_hz))`` ticks before the next one arrives.
``L`` is ``1 / policy_hz`` when a policy rate is configured, otherwise the
latency the endpoint reports.

Scoring: 1 when the object is delivered, 0.5 when it was grasped at some
point but not delivered by ``t_max``, 0 otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Literal, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vla_rig.common.errors import RigError
from vla_rig.common.json_log import JsonlLog
from vla_rig.models.action_codec import ActionCodec, tokenize, zero_action_tokens
from vla_rig.models.token_policy import TokenPolicy, predict
from vla_rig.simlab.expert import scripted_expert
from vla_rig.simlab.world import (
    EnvAction,
    WorldConfig,
    WorldState,
    delivered,
    observe,
    reset,
    step,
)

logger = logging.getLogger(__name__)

ControlKind = Literal["blocking", "non_blocking"]
Score = Literal[0.0, 0.5, 1.0]

REASON_DELIVERED = "delivered"
REASON_GRASPED = "grasped but not delivered"
REASON_NEVER_GRASPED = "never grasped"
REASON_TIMEOUT = "policy timeout"


class ControllerMode(BaseModel):
    """How predictions map onto world ticks."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: ControlKind = "blocking"
    control_hz: float = Field(default=5.0, gt=0.0)
    policy_hz: float | None = Field(default=None, gt=0.0)

    def ticks_for(self, latency_s: float) -> int:
        if self.mode == "blocking":
            return 1
        seconds = 1.0 / self.policy_hz if self.policy_hz is not None else latency_s
        return max(1, round(seconds * self.control_hz))


class EndpointTimeout(RigError):
    """Raised by an endpoint whose prediction did not arrive in time."""


class PolicyEndpoint(Protocol):
    """Anything that turns an observation into an action."""

    name: str

    def act(
        self, state: WorldState, obs: np.ndarray, instruction: str
    ) -> tuple[np.ndarray, np.ndarray | None, float]:
        """Return ``(action, tokens, latency_s)``; tokens may be ``None``."""
        ...


@dataclass
class ExpertEndpoint:
    """Scripted expert; zero latency, no tokens unless a codec is given."""

    cfg: WorldConfig = field(default_factory=WorldConfig)
    codec: ActionCodec | None = None
    name: str = "expert"

    def act(
        self, state: WorldState, obs: np.ndarray, instruction: str
    ) -> tuple[np.ndarray, np.ndarray | None, float]:
        action = np.asarray(scripted_expert(state, self.cfg).flatten(), dtype=np.float64)
        tokens = tokenize(self.codec, action) if self.codec is not None else None
        return action, tokens, 0.0


@dataclass
class LocalPolicyEndpoint:
    """In-process token policy with an optional modelled latency."""

    policy: TokenPolicy
    codec: ActionCodec
    latency_s: float = 0.0
    name: str = "policy"

    def act(
        self, state: WorldState, obs: np.ndarray, instruction: str
    ) -> tuple[np.ndarray, np.ndarray | None, float]:
        action, tokens = predict(self.policy, obs, instruction, self.codec)
        return action, tokens, self.latency_s


class TaskOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    score: Score
    reason: str


@dataclass(frozen=True)
class TrajectoryEntry:
    tick: int
    ee_pos: tuple[float, float]
    obj_pos: tuple[float, float]
    grasped: bool
    action: list[float]
    tokens: list[int] | None
    ticks_held: int


@dataclass(frozen=True)
class RolloutResult:
    outcome: TaskOutcome
    trajectory: list[TrajectoryEntry]
    initial_state: WorldState
    final_state: WorldState
    predictions: int
    latencies_s: list[float]
    ticks_per_prediction: list[int]
    frozen: bool
    ever_grasped: bool


def score_outcome(final: WorldState, ever_grasped: bool, cfg: WorldConfig) -> TaskOutcome:
    if delivered(final, cfg):
        return TaskOutcome(score=1.0, reason=REASON_DELIVERED)
    if ever_grasped:
        return TaskOutcome(score=0.5, reason=REASON_GRASPED)
    return TaskOutcome(score=0.0, reason=REASON_NEVER_GRASPED)


def rollout(
    endpoint: PolicyEndpoint,
    env_seed: int,
    mode: ControllerMode | None = None,
    t_max: int | None = None,
    cfg: WorldConfig | None = None,
    *,
    codec: ActionCodec | None = None,
    trajectory_log: JsonlLog | None = None,
) -> RolloutResult:
    """Run ``endpoint`` from the initial state of ``env_seed``.

    ``codec`` enables freeze detection: the rollout counts as frozen when the
    endpoint returns the zero-action tokens ``cfg.freeze_patience`` times in
    a row.
    """

    cfg = cfg or WorldConfig()
    mode = mode or ControllerMode(control_hz=cfg.control_hz)
    t_max = t_max or cfg.t_max
    zero = zero_action_tokens(codec) if codec is not None else None

    initial = reset(env_seed, cfg)
    state = initial
    ever_grasped = False
    trajectory: list[TrajectoryEntry] = []
    latencies: list[float] = []
    held: list[int] = []
    zero_run = 0
    frozen = False
    timed_out = False

    while state.tick < t_max and not delivered(state, cfg):
        obs = observe(state, cfg)
        try:
            action, tokens, latency_s = endpoint.act(state, obs, cfg.instruction)
        except (EndpointTimeout, TimeoutError) as exc:
            logger.warning("Endpoint %s timed out at tick %d: %s", endpoint.name, state.tick, exc)
            timed_out = True
            break

        if zero is not None and tokens is not None and np.array_equal(tokens, zero):
            zero_run += 1
            frozen = frozen or zero_run >= cfg.freeze_patience
        else:
            zero_run = 0

        ticks = min(mode.ticks_for(latency_s), t_max - state.tick)
        latencies.append(latency_s)
        held.append(ticks)
        entry = TrajectoryEntry(
            tick=state.tick,
            ee_pos=state.ee_pos,
            obj_pos=state.obj_pos,
            grasped=state.grasped,
            action=[float(v) for v in action],
            tokens=[int(t) for t in tokens] if tokens is not None else None,
            ticks_held=ticks,
        )
        trajectory.append(entry)
        if trajectory_log is not None:
            trajectory_log.append({"env_seed": env_seed, **asdict(entry)})

        env_action = EnvAction.from_vector(action)
        for _ in range(ticks):
            state = step(state, env_action, cfg)
            ever_grasped = ever_grasped or state.grasped
            if delivered(state, cfg):
                break

    if timed_out:
        outcome = TaskOutcome(score=0.0, reason=REASON_TIMEOUT)
    else:
        outcome = score_outcome(state, ever_grasped, cfg)
    return RolloutResult(
        outcome=outcome,
        trajectory=trajectory,
        initial_state=initial,
        final_state=state,
        predictions=len(trajectory),
        latencies_s=latencies,
        ticks_per_prediction=held,
        frozen=frozen,
        ever_grasped=ever_grasped,
    )


__all__ = [
    "REASON_DELIVERED",
    "REASON_GRASPED",
    "REASON_NEVER_GRASPED",
    "REASON_TIMEOUT",
    "ControlKind",
    "ControllerMode",
    "EndpointTimeout",
    "ExpertEndpoint",
    "LocalPolicyEndpoint",
    "PolicyEndpoint",
    "RolloutResult",
    "TaskOutcome",
    "TrajectoryEntry",
    "rollout",
    "score_outcome",
]
