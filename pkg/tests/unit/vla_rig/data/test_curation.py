"""Unit tests for dataset curation filters."""

import numpy as np
import pytest

from tests.utils.factories import make_episode
from vla_rig.common.errors import InputValidationError
from vla_rig.data.curation import (
    CurationOptions,
    NoOpThresholds,
    curate,
    curation_gate,
    drop_first_transition,
    filter_failed_replays,
    filter_noops,
)

MOVE = [0.05, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]
STILL_OPEN = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]
CLOSE = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]


class TestFilterNoops:
    """No-op removal."""

    def test_removes_exactly_the_planted_noops(self):
        """Test that 100 episodes with planted no-ops lose exactly those steps."""
        rng = np.random.default_rng(0)
        planted_total = 0
        for index in range(100):
            actions = [MOVE] * int(rng.integers(2, 8))
            n_noops = int(rng.integers(0, 4))
            for _ in range(n_noops):
                actions.insert(int(rng.integers(1, len(actions) + 1)), STILL_OPEN)
            planted_total += n_noops
            episode = make_episode(actions=actions, dataset_name=f"ep{index}")

            filtered = filter_noops(episode)

            assert filtered is not None
            assert filtered.n_steps == episode.n_steps - n_noops
            assert all(step.action == MOVE for step in filtered.steps)
        assert planted_total > 0

    def test_gripper_change_is_not_a_noop(self):
        episode = make_episode(actions=[MOVE, CLOSE, MOVE])

        assert filter_noops(episode) is episode

    def test_all_noop_episode_vanishes(self):
        assert filter_noops(make_episode(actions=[STILL_OPEN] * 3)) is None

    def test_small_motion_below_threshold(self):
        tiny = [1e-5, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]
        episode = make_episode(actions=[MOVE, tiny, MOVE])

        assert filter_noops(episode).n_steps == 2
        assert filter_noops(episode, NoOpThresholds(eps_translation=1e-6)).n_steps == 3

    def test_idempotent_when_leading_steps_removed(self):
        """Test that filtering twice equals filtering once after a leading no-op."""
        episode = make_episode(actions=[STILL_OPEN, CLOSE, MOVE])

        once = filter_noops(episode)
        twice = filter_noops(once)

        assert once.n_steps == 2
        assert once.meta.gripper_before == [-1.0]
        assert twice == once

    def test_idempotent_on_mixed_episodes(self):
        rng = np.random.default_rng(1)
        choices = [MOVE, STILL_OPEN, CLOSE]
        for _ in range(50):
            actions = [choices[i] for i in rng.integers(0, 3, size=8)]
            once = filter_noops(make_episode(actions=actions))
            if once is not None:
                assert filter_noops(once) == once

    def test_layout_must_cover_action(self):
        with pytest.raises(InputValidationError):
            filter_noops(make_episode(), layout=("translation", "gripper"))


class TestDropFirstTransition:
    def test_drops_one_step_and_marks(self):
        episode = make_episode(n_steps=3)

        dropped = drop_first_transition(episode)

        assert dropped.n_steps == 2
        assert dropped.meta.first_transition_dropped
        assert drop_first_transition(dropped) is dropped

    def test_single_step_episode_vanishes(self):
        assert drop_first_transition(make_episode(n_steps=1)) is None


class TestGateAndReplays:
    def test_gate(self):
        assert curation_gate(make_episode())
        assert not curation_gate(make_episode(has_third_person_camera=False))
        assert not curation_gate(make_episode(single_arm_end_effector=False))

    def test_failed_replays(self):
        episodes = [make_episode(dataset_name=f"e{i}") for i in range(3)]

        result = filter_failed_replays(episodes, [True, False, True])

        assert [ep.dataset_name for ep in result.episodes] == ["e0", "e2"]
        assert result.removed == 1
        assert result.warnings == []

    def test_all_failed_warns(self):
        result = filter_failed_replays([make_episode()], [False])

        assert result.episodes == []
        assert "every episode failed replay" in result.warnings[0]

    def test_flag_count_mismatch(self):
        with pytest.raises(InputValidationError):
            filter_failed_replays([make_episode()], [])


class TestCurate:
    """Chained filters and their summary."""

    def test_default_options_apply_gate_only(self):
        episodes = [make_episode(), make_episode(has_third_person_camera=False)]

        kept, summary = curate(episodes)

        assert len(kept) == 1
        assert [f.name for f in summary.filters] == ["curation_gate"]
        assert summary.filters[0].episodes_removed == 1
        assert summary.filters[0].steps_removed == 5

    def test_all_filters_in_order(self):
        episodes = [
            make_episode(actions=[STILL_OPEN, MOVE, STILL_OPEN, MOVE], success=True),
            make_episode(success=False),
            make_episode(single_arm_end_effector=False, success=True),
        ]
        options = CurationOptions(failed_replays=True, drop_first=True, noops=True)

        kept, summary = curate(episodes, options)

        assert [f.name for f in summary.filters] == [
            "curation_gate",
            "failed_replays",
            "drop_first_transition",
            "noops",
        ]
        assert [f.episodes_removed for f in summary.filters] == [1, 1, 0, 0]
        assert [f.steps_removed for f in summary.filters] == [5, 5, 1, 1]
        assert kept[0].n_steps == 2
        assert (summary.episodes_in, summary.steps_in) == (3, 14)
        assert (summary.episodes_out, summary.steps_out) == (1, 2)

    def test_explicit_success_flags_follow_gate(self):
        episodes = [
            make_episode(has_third_person_camera=False),
            make_episode(dataset_name="b"),
            make_episode(dataset_name="c"),
        ]
        options = CurationOptions(failed_replays=True)

        kept, _ = curate(episodes, options, success_flags=[True, False, True])

        assert [ep.dataset_name for ep in kept] == ["c"]

    def test_missing_success_counts_as_failed(self):
        kept, summary = curate([make_episode()], CurationOptions(failed_replays=True))

        assert kept == []
        assert summary.warnings

    def test_order_preserved(self):
        episodes = [make_episode(dataset_name=name) for name in "dcba"]

        kept, _ = curate(episodes, CurationOptions(noops=True, drop_first=True))

        assert [ep.dataset_name for ep in kept] == list("dcba")

    def test_summary_serialises(self):
        _, summary = curate([make_episode()])

        data = summary.as_dict()

        assert data["filters"][0]["name"] == "curation_gate"
        assert data["steps_out"] == 5
