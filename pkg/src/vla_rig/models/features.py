"""Feature encoder for the token policy.

The feature vector is the raw observation followed by a hashed bag of words
of the instruction (whitespace tokens, lower-cased, counts as values).
"""

from __future__ import annotations

from collections.abc import Sequence
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.feature_extraction.text import HashingVectorizer

from vla_rig.common.errors import InputValidationError

DEFAULT_INSTR_DIM = 64


@lru_cache(maxsize=8)
def _vectorizer(n_features: int) -> HashingVectorizer:
    return HashingVectorizer(
        n_features=n_features,
        alternate_sign=False,
        norm=None,
        lowercase=True,
        tokenizer=str.split,
        token_pattern=None,
    )


@lru_cache(maxsize=1024)
def _instruction_features(instruction: str, n_features: int) -> tuple[float, ...]:
    row = _vectorizer(n_features).transform([instruction]).toarray()[0]
    return tuple(float(v) for v in row)


class FeatureEncoder(BaseModel):
    """Maps ``(obs, instruction)`` to a fixed-length feature vector."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    obs_dim: int = Field(ge=1)
    instr_dim: int = Field(default=DEFAULT_INSTR_DIM, ge=1)

    @property
    def total_dim(self) -> int:
        return self.obs_dim + self.instr_dim

    def encode(self, obs: Sequence[float] | np.ndarray, instruction: str) -> np.ndarray:
        values = np.asarray(obs, dtype=np.float64).ravel()
        if values.size != self.obs_dim:
            raise InputValidationError(
                f"observation has {values.size} entries, encoder expects {self.obs_dim}"
            )
        if not np.all(np.isfinite(values)):
            raise InputValidationError("observation contains non-finite values")
        instr = np.asarray(_instruction_features(instruction, self.instr_dim), dtype=np.float64)
        return np.concatenate([values, instr])

    def encode_batch(
        self, observations: Sequence[Sequence[float]], instructions: Sequence[str]
    ) -> np.ndarray:
        if len(observations) != len(instructions):
            raise InputValidationError("observations and instructions differ in length")
        if not observations:
            return np.empty((0, self.total_dim), dtype=np.float64)
        return np.stack(
            [self.encode(obs, text) for obs, text in zip(observations, instructions, strict=True)]
        )


__all__ = ["DEFAULT_INSTR_DIM", "FeatureEncoder"]
