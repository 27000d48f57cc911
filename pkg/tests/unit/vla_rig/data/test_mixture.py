"""Unit tests for weighted mixture sampling."""

from pathlib import Path

import numpy as np
import pytest

from tests.utils.factories import make_episode
from vla_rig.common.errors import ConfigurationError, InputValidationError
from vla_rig.common.yaml_config import config_dir
from vla_rig.data.mixture import (
    DRAW_BLOCK,
    MixtureConfigurationError,
    MixtureSpec,
    active_weights,
    draw_batch,
    load_mixture_spec,
    mixture_report,
    sample_mixture,
)

BUNDLED = config_dir() / "mixtures" / "openx_magic_soup.json"


def spec_of(weights: dict[str, float], removal: dict | None = None) -> MixtureSpec:
    entries = [{"dataset_name": name, "weight": w} for name, w in weights.items()]
    return MixtureSpec.model_validate({"entries": entries, "removal": removal})


class TestMixtureSpec:
    def test_weights_normalised_raw_kept(self):
        spec = spec_of({"a": 0.2, "b": 0.6})

        assert spec.weights.tolist() == pytest.approx([0.25, 0.75])
        assert spec.raw_weights == (0.2, 0.6)

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            spec_of({"a": 0.0, "b": 0.0})

    def test_duplicate_names_rejected(self):
        entries = [{"dataset_name": "a", "weight": 0.5}] * 2
        with pytest.raises(ValueError):
            MixtureSpec.model_validate({"entries": entries})

    def test_removal_of_unknown_dataset_rejected(self):
        with pytest.raises(ValueError):
            spec_of({"a": 1.0}, {"dataset_name": "b", "at_fraction": 0.5})


class TestActiveWeights:
    def test_removal_spreads_proportionally(self):
        spec = spec_of({"a": 0.5, "b": 0.3, "c": 0.2}, {"dataset_name": "a", "at_fraction": 0.5})

        before = active_weights(spec, 0.49)
        after = active_weights(spec, 0.5)

        assert before.tolist() == pytest.approx([0.5, 0.3, 0.2])
        assert after.tolist() == pytest.approx([0.0, 0.6, 0.4])

    def test_removing_only_positive_dataset(self):
        spec = spec_of({"a": 1.0, "b": 0.0}, {"dataset_name": "a", "at_fraction": 0.5})

        with pytest.raises(MixtureConfigurationError):
            active_weights(spec, 0.9)

    @pytest.mark.parametrize("progress", [-0.1, 1.5])
    def test_progress_range(self, progress):
        with pytest.raises(InputValidationError):
            active_weights(spec_of({"a": 1.0}), progress)


class TestSampling:
    """Draw statistics and determinism."""

    def test_empirical_frequencies_match_weights(self):
        """Test that 10^6 draws from the bundled mixture are within L1 0.01 of its weights."""
        spec = load_mixture_spec(BUNDLED)
        sizes = dict.fromkeys(spec.names, 10)

        chosen, _ = draw_batch(spec, sizes, 0.0, rng_seed=0, count=1_000_000)

        freq = np.bincount(chosen, minlength=len(spec.names)) / chosen.size
        assert np.abs(freq - spec.weights).sum() <= 0.01

    def test_removed_dataset_mass_moves_to_survivors(self):
        """Test that after removal the survivors follow the renormalised weights within L1 0.01."""
        spec = load_mixture_spec(BUNDLED)
        sizes = dict.fromkeys(spec.names, 10)
        droid = spec.names.index("droid")

        chosen, _ = draw_batch(spec, sizes, 0.7, rng_seed=3, count=1_000_000)

        counts = np.bincount(chosen, minlength=len(spec.names))
        assert counts[droid] == 0
        expected = spec.weights.copy()
        expected[droid] = 0.0
        expected /= expected.sum()
        assert np.abs(counts / chosen.size - expected).sum() <= 0.01

    def test_single_entry_always_chosen(self):
        spec = spec_of({"only": 0.3})

        chosen, episodes = draw_batch(spec, {"only": 4}, 0.5, rng_seed=1, count=1000)

        assert set(chosen.tolist()) == {0}
        assert set(episodes.tolist()) == {0, 1, 2, 3}

    def test_batch_matches_single_draws_across_blocks(self):
        spec = spec_of({"a": 0.5, "b": 0.5})
        datasets = {"a": [make_episode()] * 3, "b": [make_episode()] * 7}
        start = DRAW_BLOCK - 5

        chosen, episodes = draw_batch(spec, {"a": 3, "b": 7}, 0.0, 9, start=start, count=10)

        for offset in range(10):
            draw = sample_mixture(spec, datasets, 0.0, 9, draw_index=start + offset)
            assert draw.dataset_name == spec.names[chosen[offset]]
            assert draw.episode_index == episodes[offset]

    def test_same_seed_same_draws(self):
        spec = spec_of({"a": 0.2, "b": 0.8})
        sizes = {"a": 5, "b": 5}

        first = draw_batch(spec, sizes, 0.0, 4, count=500)
        second = draw_batch(spec, sizes, 0.0, 4, count=500)
        other = draw_batch(spec, sizes, 0.0, 5, count=500)

        assert np.array_equal(first[0], second[0]) and np.array_equal(first[1], second[1])
        assert not np.array_equal(first[0], other[0])

    def test_resolve_returns_episode(self):
        spec = spec_of({"a": 1.0})
        episodes = [make_episode(dataset_name="a", n_steps=n) for n in (1, 2, 3)]

        draw = sample_mixture(spec, {"a": episodes}, 0.0, 0, draw_index=2)

        assert draw.resolve({"a": episodes}) is episodes[draw.episode_index]

    def test_positive_weight_without_episodes(self):
        with pytest.raises(InputValidationError, match="'b'"):
            draw_batch(spec_of({"a": 0.5, "b": 0.5}), {"a": 2}, 0.0, 0)

    def test_negative_seed_rejected(self):
        with pytest.raises(InputValidationError):
            draw_batch(spec_of({"a": 1.0}), {"a": 1}, 0.0, -1)


class TestMixtureReport:
    def test_bundled_report(self):
        spec = load_mixture_spec(BUNDLED)

        report = mixture_report(spec)

        assert len(report.rows) == 27
        assert report.normalized
        droid = next(row for row in report.rows if row.dataset_name == "droid")
        assert droid.removed
        assert droid.weight_after_removal == 0.0
        assert droid.raw_weight == 0.1
        assert len(report.warnings) == 27

    def test_counts_episodes_and_steps(self):
        spec = spec_of({"a": 0.5, "b": 0.5})
        datasets = {"a": [make_episode(n_steps=2), make_episode(n_steps=3)]}

        frame = mixture_report(spec, datasets).as_frame()

        assert frame.loc["a", "episodes"] == 2
        assert frame.loc["a", "steps"] == 5
        assert frame.loc["b", "episodes"] == 0


class TestLoadMixtureSpec:
    def test_yaml_file(self, tmp_path: Path):
        path = tmp_path / "mix.yaml"
        path.write_text(
            "name: small\n"
            "entries:\n"
            "  - {dataset_name: a, weight: 1}\n"
            "  - {dataset_name: b, weight: 3}\n",
            encoding="utf-8",
        )

        spec = load_mixture_spec(path)

        assert spec.names == ["a", "b"]
        assert spec.weights.tolist() == pytest.approx([0.25, 0.75])

    def test_invalid_file(self, tmp_path: Path):
        path = tmp_path / "mix.json"
        path.write_text('{"entries": []}', encoding="utf-8")

        with pytest.raises(ConfigurationError):
            load_mixture_spec(path)

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigurationError):
            load_mixture_spec(tmp_path / "none.json")
