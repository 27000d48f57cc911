"""Score aggregation."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats

from vla_rig.common.errors import InputValidationError


@dataclass(frozen=True)
class Aggregate:
    mean: float
    stderr: float
    n: int


def aggregate(scores: Sequence[float]) -> Aggregate:
    """Mean and standard error of per-rollout scores.

    The standard error is the sample standard deviation (``n - 1``
    denominator) over ``sqrt(n)``; partial scores enter as-is. A single
    score has standard error 0.
    """

    values = np.asarray(scores, dtype=np.float64)
    if values.size == 0:
        raise InputValidationError("cannot aggregate an empty list of scores")
    if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise InputValidationError("scores must be finite and lie in [0, 1]")
    mean = float(values.mean())
    if values.size == 1:
        return Aggregate(mean=mean, stderr=0.0, n=1)
    stderr = float(stats.sem(values, ddof=1))
    return Aggregate(mean=mean, stderr=0.0 if math.isnan(stderr) else stderr, n=int(values.size))


__all__ = ["Aggregate", "aggregate"]
