"""Unit tests for episode records and the JSON-lines store."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from tests.utils.factories import make_episode, make_step
from vla_rig.common.errors import FormatVersionError, InputValidationError
from vla_rig.data.episodes import (
    Episode,
    action_columns,
    count_steps,
    read_episodes,
    write_episodes,
)


class TestEpisodeModel:
    def test_needs_at_least_one_step(self):
        with pytest.raises(ValidationError):
            Episode(dataset_name="toy", instruction="x", steps=[])

    def test_non_finite_action_rejected(self):
        with pytest.raises(ValidationError, match="action\\[2\\] is not finite"):
            make_step(action=[0.0, 0.0, float("nan"), 0.0, 0.0, 0.0, -1.0])

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            Episode.model_validate(
                {"dataset_name": "toy", "instruction": "x", "steps": [], "robot": "ur5"}
            )


class TestEpisodeStore:
    """Writing and reading dataset files."""

    def test_round_trip(self, tmp_path: Path):
        episodes = [make_episode(n_steps=3), make_episode(n_steps=2, env_seed=11)]
        path = tmp_path / "toy.jsonl"

        assert write_episodes(path, episodes) == 2

        assert read_episodes(path) == episodes

    def test_header_line(self, tmp_path: Path):
        path = tmp_path / "toy.jsonl"
        write_episodes(path, [make_episode()])

        first = path.read_text(encoding="utf-8").splitlines()[0]

        assert first == '{"format":"vla-episodes","version":1}'

    def test_empty_dataset_is_header_only(self, tmp_path: Path):
        path = tmp_path / "empty.jsonl"

        write_episodes(path, [])

        assert path.read_text(encoding="utf-8").count("\n") == 1
        assert read_episodes(path) == []

    def test_writes_are_byte_stable(self, tmp_path: Path):
        episodes = [make_episode(n_steps=4, success=True)]

        write_episodes(tmp_path / "a.jsonl", episodes)
        write_episodes(tmp_path / "b.jsonl", read_episodes(tmp_path / "a.jsonl"))

        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_wrong_header(self, tmp_path: Path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"format":"vla-episodes","version":2}\n', encoding="utf-8")

        with pytest.raises(FormatVersionError):
            read_episodes(path)

    def test_bad_line_reports_line_number(self, tmp_path: Path):
        path = tmp_path / "toy.jsonl"
        write_episodes(path, [make_episode()])
        with path.open("a", encoding="utf-8") as handle:
            handle.write('{"dataset_name": "toy"}\n')

        with pytest.raises(InputValidationError, match=":3:"):
            read_episodes(path)


class TestActionColumns:
    def test_columns_per_dimension(self):
        episodes = [make_episode(actions=[[float(i)] * 7 for i in range(3)])]

        columns = action_columns(episodes, 7)

        assert len(columns) == 7
        assert columns[6].tolist() == [0.0, 1.0, 2.0]

    def test_length_mismatch(self):
        with pytest.raises(InputValidationError):
            action_columns([make_episode()], 6)

    def test_count_steps(self):
        assert count_steps([make_episode(n_steps=3), make_episode(n_steps=4)]) == 7
