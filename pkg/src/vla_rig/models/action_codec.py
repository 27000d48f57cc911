"""Continuous action <-> token codec.

Each action dimension is discretised separately: the interval between the
1st and 99th percentile of the training actions is split into
``bins_per_dim`` equal-width bins, and bin ``b`` is written as token
``vocab_size - reserved + b``, i.e. the last ``reserved`` ids of the
vocabulary in ascending bin order.

Percentiles use the nearest-rank estimator: for probability ``p`` over ``n``
sorted samples the value is the one at 1-indexed rank ``ceil(p * n)``.
Values outside the fitted interval clamp into the end bins. A dimension whose
percentiles coincide (constant data) has zero width; it always tokenizes to
the middle bin 127 and decodes to ``q_lo``.

Decoding returns bin centres, ``q_lo + (bin + 0.5) * width``.

Example:
    >>> codec = fit_codec([[float(v) for v in range(100)]], ActionSpec(n_dims=1))
    >>> codec.per_dim[0].q_lo, codec.per_dim[0].q_hi
    (0.0, 98.0)
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from vla_rig.common.errors import InputValidationError, RigError
from vla_rig.common.serialization import read_document, write_document
from vla_rig.data.episodes import Episode, action_columns

CODEC_FORMAT = "vla-action-codec"
CODEC_FORMAT_VERSION = 1

LOWER_PERCENTILE = 1
UPPER_PERCENTILE = 99


class CodecFitError(RigError):
    """Raised when a codec cannot be fitted from the supplied samples."""


class TokenDecodeError(RigError, ValueError):
    """Raised when a token id falls outside the reserved action range."""

    def __init__(self, message: str, *, token: int, dimension: int) -> None:
        super().__init__(message)
        self.token = token
        self.dimension = dimension


class ActionSpec(BaseModel):
    """Shape of the action space: dimension count and bins per dimension."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_dims: int = Field(default=7, ge=1)
    bins_per_dim: int = Field(default=256, ge=2)


class DimQuantiles(BaseModel):
    """Discretisation interval of one action dimension."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    q_lo: float
    q_hi: float
    width: float

    @model_validator(mode="after")
    def _check_interval(self) -> DimQuantiles:
        if not (math.isfinite(self.q_lo) and math.isfinite(self.q_hi)):
            raise ValueError("quantile bounds must be finite")
        if self.q_lo > self.q_hi:
            raise ValueError(f"q_lo {self.q_lo} exceeds q_hi {self.q_hi}")
        if self.width < 0:
            raise ValueError("width must be non-negative")
        if (self.width == 0) != (self.q_lo == self.q_hi):
            raise ValueError("width is zero exactly when q_lo equals q_hi")
        return self

    @classmethod
    def from_bounds(cls, q_lo: float, q_hi: float, bins_per_dim: int) -> DimQuantiles:
        return cls(q_lo=q_lo, q_hi=q_hi, width=(q_hi - q_lo) / bins_per_dim)


class TokenMap(BaseModel):
    """Placement of the action bins at the tail of an LLM vocabulary."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    vocab_size: int = Field(default=32000, ge=1)
    reserved: int = Field(default=256, ge=1)

    @model_validator(mode="after")
    def _check_fits(self) -> TokenMap:
        if self.vocab_size < self.reserved:
            raise ValueError(
                f"vocab_size {self.vocab_size} cannot hold {self.reserved} reserved tokens"
            )
        return self

    @property
    def offset(self) -> int:
        """Token id of bin 0."""
        return self.vocab_size - self.reserved

    def token_for_bin(self, bin_index: int) -> int:
        if not 0 <= bin_index < self.reserved:
            raise InputValidationError(f"bin {bin_index} outside [0, {self.reserved - 1}]")
        return self.offset + bin_index

    def bin_for_token(self, token: int, dimension: int = 0) -> int:
        if not self.offset <= token < self.vocab_size:
            raise TokenDecodeError(
                f"token {token} for dimension {dimension} outside "
                f"[{self.offset}, {self.vocab_size - 1}]",
                token=token,
                dimension=dimension,
            )
        return token - self.offset


class ActionCodec(BaseModel):
    """Fitted per-dimension quantiles plus the vocabulary mapping."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    spec: ActionSpec
    per_dim: tuple[DimQuantiles, ...]
    token_map: TokenMap

    @model_validator(mode="after")
    def _check_shapes(self) -> ActionCodec:
        if len(self.per_dim) != self.spec.n_dims:
            raise ValueError(
                f"per_dim has {len(self.per_dim)} entries, spec declares {self.spec.n_dims}"
            )
        if self.token_map.reserved != self.spec.bins_per_dim:
            raise ValueError("token_map.reserved must equal spec.bins_per_dim")
        return self

    @property
    def q_lo(self) -> np.ndarray:
        return np.array([d.q_lo for d in self.per_dim], dtype=np.float64)

    @property
    def widths(self) -> np.ndarray:
        return np.array([d.width for d in self.per_dim], dtype=np.float64)


def degenerate_bin(spec: ActionSpec) -> int:
    """Middle bin used for zero-width dimensions (127 for 256 bins)."""
    return (spec.bins_per_dim - 1) // 2


def _nearest_rank_index(n: int, percentile: int) -> int:
    # ceil(percentile * n / 100) in integer arithmetic, converted to 0-based.
    rank = -(-percentile * n // 100)
    return max(rank, 1) - 1


def fit_codec(
    samples: Sequence[Sequence[float]],
    spec: ActionSpec | None = None,
    token_map: TokenMap | None = None,
) -> ActionCodec:
    """Fit per-dimension nearest-rank 1st/99th percentile bounds.

    Args:
        samples: One collection of action values per dimension.
        spec: Action space shape; defaults to 7 dims x 256 bins.
        token_map: Vocabulary placement; defaults to the last 256 of 32000 ids.
    """

    spec = spec or ActionSpec()
    token_map = token_map or TokenMap(reserved=spec.bins_per_dim)
    if token_map.reserved != spec.bins_per_dim:
        raise InputValidationError("token_map.reserved must equal spec.bins_per_dim")
    if len(samples) != spec.n_dims:
        raise InputValidationError(
            f"expected samples for {spec.n_dims} dimensions, got {len(samples)}"
        )

    per_dim: list[DimQuantiles] = []
    for dim, values in enumerate(samples):
        column = np.asarray(values, dtype=np.float64).ravel()
        if column.size < 2:
            raise CodecFitError(
                f"dimension {dim} has {column.size} samples; at least 2 are required"
            )
        bad = np.flatnonzero(~np.isfinite(column))
        if bad.size:
            raise InputValidationError(
                f"non-finite sample in dimension {dim} at index {int(bad[0])}"
            )
        ordered = np.sort(column, kind="stable")
        q_lo = float(ordered[_nearest_rank_index(ordered.size, LOWER_PERCENTILE)])
        q_hi = float(ordered[_nearest_rank_index(ordered.size, UPPER_PERCENTILE)])
        per_dim.append(DimQuantiles.from_bounds(q_lo, q_hi, spec.bins_per_dim))

    return ActionCodec(spec=spec, per_dim=tuple(per_dim), token_map=token_map)


def _as_action_matrix(codec: ActionCodec, actions: Any) -> np.ndarray:
    matrix = np.asarray(actions, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.ndim != 2 or matrix.shape[1] != codec.spec.n_dims:
        raise InputValidationError(
            f"action must have {codec.spec.n_dims} entries, got shape {np.shape(actions)}"
        )
    if not np.all(np.isfinite(matrix)):
        row, col = np.argwhere(~np.isfinite(matrix))[0]
        raise InputValidationError(f"non-finite action entry at dimension {int(col)} (row {row})")
    return matrix


def action_bins(codec: ActionCodec, actions: Any) -> np.ndarray:
    """Bin indices for one action (shape ``(n_dims,)``) or a batch ``(N, n_dims)``."""

    single = np.ndim(actions) == 1
    matrix = _as_action_matrix(codec, actions)
    q_lo = codec.q_lo
    widths = codec.widths
    degenerate = widths == 0
    safe_widths = np.where(degenerate, 1.0, widths)
    raw = np.floor((matrix - q_lo) / safe_widths)
    bins = np.clip(raw, 0, codec.spec.bins_per_dim - 1).astype(np.int64)
    bins[:, degenerate] = degenerate_bin(codec.spec)
    return bins[0] if single else bins


def tokenize(codec: ActionCodec, action: Sequence[float] | np.ndarray) -> np.ndarray:
    """Map a continuous action to token ids."""

    if np.ndim(action) != 1:
        raise InputValidationError("tokenize expects a single action vector")
    return action_bins(codec, action) + codec.token_map.offset


def token_bins(codec: ActionCodec, tokens: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate token ids and convert them to bin indices."""

    ids = [int(t) for t in np.asarray(tokens).ravel()]
    if len(ids) != codec.spec.n_dims:
        raise InputValidationError(
            f"expected {codec.spec.n_dims} tokens, got {len(ids)}"
        )
    return np.array(
        [codec.token_map.bin_for_token(token, dim) for dim, token in enumerate(ids)],
        dtype=np.int64,
    )


def bins_to_action(codec: ActionCodec, bins: np.ndarray) -> np.ndarray:
    widths = codec.widths
    centres = codec.q_lo + (np.asarray(bins, dtype=np.float64) + 0.5) * widths
    return np.where(widths == 0, codec.q_lo, centres)


def detokenize(codec: ActionCodec, tokens: Sequence[int] | np.ndarray) -> np.ndarray:
    """Map token ids back to the centres of their bins."""

    return bins_to_action(codec, token_bins(codec, tokens))


def zero_action_tokens(codec: ActionCodec) -> np.ndarray:
    """Tokens of the all-zero action."""
    return tokenize(codec, np.zeros(codec.spec.n_dims))


def fit_codec_from_episodes(
    episodes: Iterable[Episode],
    spec: ActionSpec | None = None,
    token_map: TokenMap | None = None,
) -> ActionCodec:
    """Fit a codec on the actions of every step of ``episodes``."""

    spec = spec or ActionSpec()
    return fit_codec(action_columns(episodes, spec.n_dims), spec, token_map)


def save_codec(codec: ActionCodec, path: Path) -> Path:
    payload = codec.model_dump(mode="json")
    payload["bin_order"] = "ascending"
    return write_document(path, CODEC_FORMAT, CODEC_FORMAT_VERSION, payload, indent=2)


def load_codec(path: Path) -> ActionCodec:
    payload = read_document(path, CODEC_FORMAT, {CODEC_FORMAT_VERSION})
    order = payload.pop("bin_order", "ascending")
    if order != "ascending":
        raise InputValidationError(f"unsupported bin_order {order!r} in {path}")
    return ActionCodec.model_validate(payload)


__all__ = [
    "CODEC_FORMAT",
    "CODEC_FORMAT_VERSION",
    "ActionCodec",
    "ActionSpec",
    "CodecFitError",
    "DimQuantiles",
    "TokenDecodeError",
    "TokenMap",
    "action_bins",
    "bins_to_action",
    "degenerate_bin",
    "detokenize",
    "fit_codec",
    "fit_codec_from_episodes",
    "load_codec",
    "save_codec",
    "token_bins",
    "tokenize",
    "zero_action_tokens",
]
