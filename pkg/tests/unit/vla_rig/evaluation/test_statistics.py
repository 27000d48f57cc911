"""Unit tests for score aggregation."""

import pytest

from vla_rig.common.errors import InputValidationError
from vla_rig.evaluation.statistics import aggregate


class TestAggregate:
    @pytest.mark.parametrize(
        ("scores", "mean", "stderr"),
        [
            ([1, 1, 0, 0], 0.5, 0.28867513459481287),
            ([1, 0], 0.5, 0.5),
            ([1, 0.5, 0], 0.5, 0.28867513459481287),
            ([1, 1, 1], 1.0, 0.0),
        ],
    )
    def test_mean_and_standard_error(self, scores, mean, stderr):
        result = aggregate(scores)

        assert result.mean == pytest.approx(mean, abs=1e-12)
        assert result.stderr == pytest.approx(stderr, abs=1e-12)
        assert result.n == len(scores)

    def test_single_score(self):
        result = aggregate([0.5])

        assert (result.mean, result.stderr, result.n) == (0.5, 0.0, 1)

    def test_empty_is_an_error(self):
        with pytest.raises(InputValidationError):
            aggregate([])

    @pytest.mark.parametrize("scores", [[1.5], [-0.1, 0.0], [float("nan")]])
    def test_scores_outside_unit_interval(self, scores):
        with pytest.raises(InputValidationError):
            aggregate(scores)
