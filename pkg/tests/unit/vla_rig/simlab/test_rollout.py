"""Unit tests for closed-loop rollouts, collection and replay."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pytest

from tests.utils.factories import make_episode, symmetric_codec
from vla_rig.common.json_log import JsonlLog
from vla_rig.common.seeding import derive_seed
from vla_rig.simlab.collect import collect_demonstrations, collect_episode, replay_episode
from vla_rig.simlab.expert import scripted_expert
from vla_rig.simlab.rollout import (
    REASON_DELIVERED,
    REASON_GRASPED,
    REASON_NEVER_GRASPED,
    REASON_TIMEOUT,
    ControllerMode,
    EndpointTimeout,
    ExpertEndpoint,
    rollout,
)
from vla_rig.simlab.world import GRIPPER_CLOSE, WorldConfig, WorldState

ZERO = np.zeros(7)


@dataclass
class SlowExpert:
    """Expert actions reported with a fixed latency."""

    latency_s: float
    name: str = "slow-expert"

    def act(self, state: WorldState, obs, instruction):
        return np.asarray(scripted_expert(state).flatten()), None, self.latency_s


@dataclass
class GraspAndHold:
    """Follows the expert until the object is grasped, then holds still."""

    name: str = "grasp-and-hold"

    def act(self, state: WorldState, obs, instruction):
        if state.grasped:
            held = ZERO.copy()
            held[6] = GRIPPER_CLOSE
            return held, None, 0.0
        return np.asarray(scripted_expert(state).flatten()), None, 0.0


@dataclass
class Constant:
    action: np.ndarray
    tokens: np.ndarray | None = None
    name: str = "constant"
    calls: list[int] = field(default_factory=list)

    def act(self, state: WorldState, obs, instruction):
        self.calls.append(state.tick)
        return self.action, self.tokens, 0.0


@dataclass
class TimesOut:
    name: str = "times-out"

    def act(self, state: WorldState, obs, instruction):
        raise EndpointTimeout("no reply")


class TestControllerMode:
    def test_blocking_is_one_tick(self):
        assert ControllerMode(mode="blocking").ticks_for(3.0) == 1

    @pytest.mark.parametrize(
        ("latency_s", "ticks"), [(0.0, 1), (0.05, 1), (0.167, 1), (0.333, 2), (0.833, 4)]
    )
    def test_non_blocking_holds_for_latency(self, latency_s, ticks):
        assert ControllerMode(mode="non_blocking", control_hz=5.0).ticks_for(latency_s) == ticks

    def test_policy_rate_overrides_latency(self):
        slow = ControllerMode(mode="non_blocking", control_hz=5.0, policy_hz=1.2)
        fast = ControllerMode(mode="non_blocking", control_hz=5.0, policy_hz=5.0)

        assert slow.ticks_for(0.0) == 4
        assert fast.ticks_for(10.0) == 1


class TestRollout:
    """Scoring, freeze detection and control modes."""

    def test_expert_delivers(self):
        result = rollout(ExpertEndpoint(), env_seed=3)

        assert result.outcome.score == 1.0
        assert result.outcome.reason == REASON_DELIVERED
        assert result.predictions == len(result.trajectory) == result.final_state.tick
        assert not result.frozen

    def test_grasp_without_delivery_scores_half(self):
        result = rollout(GraspAndHold(), env_seed=3, t_max=120)

        assert result.ever_grasped
        assert result.outcome.score == 0.5
        assert result.outcome.reason == REASON_GRASPED
        assert result.final_state.tick == 120

    def test_idle_policy_scores_zero(self):
        result = rollout(Constant(ZERO), env_seed=3, t_max=20)

        assert result.outcome.score == 0.0
        assert result.outcome.reason == REASON_NEVER_GRASPED

    def test_freeze_detected_from_zero_tokens(self):
        codec = symmetric_codec()
        tokens = np.full(7, 31872)
        cfg = WorldConfig(freeze_patience=5)

        frozen = rollout(Constant(ZERO, tokens), 3, t_max=20, cfg=cfg, codec=codec)
        short = rollout(Constant(ZERO, tokens), 3, t_max=4, cfg=cfg, codec=codec)

        assert frozen.frozen
        assert not short.frozen

    def test_freeze_needs_a_codec(self):
        assert not rollout(Constant(ZERO, np.full(7, 31872)), 3, t_max=20).frozen

    def test_blocking_ignores_latency(self):
        """Test that blocking trajectories do not depend on reported latency."""
        fast = rollout(SlowExpert(0.0), 11, ControllerMode(mode="blocking"))
        slow = rollout(SlowExpert(2.0), 11, ControllerMode(mode="blocking"))

        assert [e.ee_pos for e in fast.trajectory] == [e.ee_pos for e in slow.trajectory]
        assert fast.outcome == slow.outcome
        assert set(slow.ticks_per_prediction) == {1}

    def test_non_blocking_holds_actions(self):
        mode = ControllerMode(mode="non_blocking", control_hz=5.0)

        result = rollout(SlowExpert(0.833), 11, mode, t_max=60)

        assert set(result.ticks_per_prediction[:-1]) == {4}
        assert result.final_state.tick <= 60
        assert result.predictions < 60 // 4 + 1

    def test_hold_is_capped_at_horizon(self):
        mode = ControllerMode(mode="non_blocking", control_hz=5.0)

        result = rollout(Constant(ZERO), 0, mode, t_max=10, cfg=WorldConfig())
        slow = rollout(SlowExpert(0.833), 0, mode, t_max=10)

        assert result.final_state.tick == 10
        assert sum(slow.ticks_per_prediction) <= 10
        assert slow.ticks_per_prediction == [4, 4, 2] or slow.outcome.score == 1.0

    def test_timeout_scores_zero(self):
        result = rollout(TimesOut(), 3)

        assert result.outcome.score == 0.0
        assert result.outcome.reason == REASON_TIMEOUT
        assert result.predictions == 0

    def test_trajectory_log(self, tmp_path: Path):
        log = JsonlLog(tmp_path / "trajectory.jsonl")

        result = rollout(ExpertEndpoint(codec=symmetric_codec()), 3, trajectory_log=log)

        entries = log.read_all()
        assert len(entries) == result.predictions
        assert entries[0]["env_seed"] == 3
        assert entries[0]["tick"] == 0
        assert len(entries[0]["tokens"]) == 7


class TestCollect:
    def test_expert_demonstrations_all_succeed(self):
        episodes = collect_demonstrations(20, seed=0)

        assert all(ep.meta.success for ep in episodes)
        assert [ep.meta.env_seed for ep in episodes] == [derive_seed(0, i) for i in range(20)]
        assert all(ep.steps[-1].is_terminal for ep in episodes)
        assert not any(step.is_terminal for ep in episodes for step in ep.steps[:-1])

    def test_same_seed_same_episodes(self):
        assert collect_demonstrations(5, seed=4) == collect_demonstrations(5, seed=4)
        assert collect_demonstrations(5, seed=4) != collect_demonstrations(5, seed=5)

    def test_initial_noop_only_changes_first_record(self):
        plain = collect_episode(99)
        poisoned = collect_episode(99, initial_noop=True)

        assert poisoned.steps[0].action == [0.0] * 7
        assert poisoned.steps[1:] == plain.steps[1:]
        assert poisoned.steps[0].obs == plain.steps[0].obs

    def test_observations_match_world(self):
        episode = collect_episode(7)

        assert len(episode.steps[0].obs) == 6
        assert episode.instruction == WorldConfig().instruction

    def test_replay_reproduces_success(self):
        for episode in collect_demonstrations(10, seed=1):
            assert replay_episode(episode)

    def test_replay_without_seed_fails(self):
        assert not replay_episode(make_episode())

    def test_replay_of_truncated_episode_fails(self):
        episode = collect_episode(2)
        truncated = episode.model_copy(update={"steps": episode.steps[:-3]})

        assert not replay_episode(truncated)
