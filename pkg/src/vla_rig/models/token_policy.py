"""Per-dimension linear-softmax action policy.

For every action dimension ``k`` the policy scores all ``bins`` action bins
with ``W[k] @ x + b[k]``. Training minimises the cross-entropy of the
target bins, averaged over samples and dimensions, with plain gradient
descent. Nothing but the action tokens enters the loss.

Decoding modes:

- ``greedy``: per-dimension argmax.
- ``second_best``: per-dimension second-highest logit.
- ``dynamic``: greedy, unless the greedy tokens equal the tokens of the
  all-zero action, in which case every dimension takes its second-best bin.

Ties are broken towards the lower bin index in every mode.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import log_softmax, softmax

from vla_rig.common.errors import InputValidationError, RigError
from vla_rig.common.serialization import read_document, write_document
from vla_rig.data.episodes import Episode
from vla_rig.models.action_codec import (
    ActionCodec,
    ActionSpec,
    action_bins,
    bins_to_action,
    zero_action_tokens,
)
from vla_rig.models.features import FeatureEncoder

logger = logging.getLogger(__name__)

DecodeMode = Literal["greedy", "second_best", "dynamic"]
DECODE_MODES: tuple[DecodeMode, ...] = ("greedy", "second_best", "dynamic")

POLICY_FORMAT = "vla-token-policy"
POLICY_FORMAT_VERSION = 1


class TrainingError(RigError):
    """Raised when training diverges."""

    def __init__(self, message: str, *, epoch: int) -> None:
        super().__init__(message)
        self.epoch = epoch


class InferenceError(RigError):
    """Raised when a policy cannot produce an action."""


class TrainConfig(BaseModel):
    """Optimisation settings for ``train``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=30, ge=1)
    learning_rate: float = Field(default=1e-2, gt=0.0)
    rng_seed: int = Field(default=0, ge=0)
    target_token_accuracy: float = Field(default=0.95, ge=0.0, le=1.0)
    batch_size: int = Field(default=1, ge=1)
    init_scale: float = Field(default=0.0, ge=0.0)


@dataclass(frozen=True)
class TokenPolicy:
    """Trainable parameters plus the decode mode.

    ``weights`` has shape ``(n_dims, bins, total_dim)`` and ``biases``
    ``(n_dims, bins)``. Instances are treated as immutable; training returns
    a new policy.
    """

    spec: ActionSpec
    encoder: FeatureEncoder
    weights: np.ndarray
    biases: np.ndarray
    decode_mode: DecodeMode = "greedy"

    def __post_init__(self) -> None:
        k, b, d = self.spec.n_dims, self.spec.bins_per_dim, self.encoder.total_dim
        if self.weights.shape != (k, b, d):
            raise InputValidationError(f"weights shape {self.weights.shape}, expected {(k, b, d)}")
        if self.biases.shape != (k, b):
            raise InputValidationError(f"biases shape {self.biases.shape}, expected {(k, b)}")
        if self.decode_mode not in DECODE_MODES:
            raise InputValidationError(f"unknown decode mode {self.decode_mode!r}")

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases)))

    def with_decode_mode(self, mode: DecodeMode) -> TokenPolicy:
        return replace(self, decode_mode=mode)


class PolicyGradient(NamedTuple):
    weights: np.ndarray
    biases: np.ndarray


@dataclass(frozen=True)
class TrainingSet:
    """Encoded features, target bins and the dataset each sample came from."""

    features: np.ndarray
    targets: np.ndarray
    datasets: tuple[str, ...] = ()

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def subset(self, index: np.ndarray) -> TrainingSet:
        tags = tuple(self.datasets[i] for i in index) if self.datasets else ()
        return TrainingSet(self.features[index], self.targets[index], tags)


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    loss: float
    token_accuracy: float
    per_dataset_accuracy: dict[str, float] = field(default_factory=dict)
    elapsed_s: float = 0.0


def init_policy(
    spec: ActionSpec,
    encoder: FeatureEncoder,
    cfg: TrainConfig | None = None,
    decode_mode: DecodeMode = "greedy",
) -> TokenPolicy:
    """Zero biases; weights zero or Gaussian with ``cfg.init_scale``."""

    cfg = cfg or TrainConfig()
    shape = (spec.n_dims, spec.bins_per_dim, encoder.total_dim)
    if cfg.init_scale > 0:
        weights = np.random.default_rng(cfg.rng_seed).normal(0.0, cfg.init_scale, size=shape)
    else:
        weights = np.zeros(shape, dtype=np.float64)
    biases = np.zeros((spec.n_dims, spec.bins_per_dim), dtype=np.float64)
    return TokenPolicy(spec, encoder, weights, biases, decode_mode)


def build_training_set(
    episodes: Sequence[Episode], encoder: FeatureEncoder, codec: ActionCodec
) -> TrainingSet:
    """Encode every step of ``episodes`` into features and target bins."""

    observations = [step.obs for ep in episodes for step in ep.steps]
    instructions = [ep.instruction for ep in episodes for _ in ep.steps]
    tags = tuple(ep.dataset_name for ep in episodes for _ in ep.steps)
    features = encoder.encode_batch(observations, instructions)
    if not observations:
        return TrainingSet(features, np.empty((0, codec.spec.n_dims), dtype=np.int64), ())
    actions = np.asarray([step.action for ep in episodes for step in ep.steps], dtype=np.float64)
    return TrainingSet(features, action_bins(codec, actions), tags)


def logits(policy: TokenPolicy, features: np.ndarray) -> np.ndarray:
    """Logits of shape ``(N, n_dims, bins)``, or ``(n_dims, bins)`` for one sample."""

    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    matrix = x[None, :] if single else x
    if matrix.shape[1] != policy.encoder.total_dim:
        raise InputValidationError(
            f"features have {matrix.shape[1]} columns, policy expects {policy.encoder.total_dim}"
        )
    out = np.einsum("kbd,nd->nkb", policy.weights, matrix) + policy.biases
    return out[0] if single else out


def probabilities(policy: TokenPolicy, features: np.ndarray) -> np.ndarray:
    return softmax(logits(policy, features), axis=-1)


def _check_targets(policy: TokenPolicy, targets: np.ndarray) -> np.ndarray:
    t = np.asarray(targets)
    if t.ndim != 2 or t.shape[1] != policy.spec.n_dims:
        raise InputValidationError(f"targets must have shape (N, {policy.spec.n_dims})")
    if t.size and (t.min() < 0 or t.max() >= policy.spec.bins_per_dim):
        raise InputValidationError(
            f"target bins must lie in [0, {policy.spec.bins_per_dim - 1}]"
        )
    return t.astype(np.int64)


def loss_and_grad(
    policy: TokenPolicy, features: np.ndarray, targets: np.ndarray
) -> tuple[float, PolicyGradient]:
    """Mean cross-entropy over samples and dimensions and its exact gradient."""

    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    t = _check_targets(policy, np.atleast_2d(targets))
    n, k = t.shape
    if n == 0 or x.shape[0] != n:
        raise InputValidationError("features and targets must be non-empty and aligned")

    z = logits(policy, x)
    log_p = log_softmax(z, axis=-1)
    rows = np.arange(n)[:, None]
    dims = np.arange(k)[None, :]
    loss = -float(log_p[rows, dims, t].mean())

    delta = np.exp(log_p)
    delta[rows, dims, t] -= 1.0
    delta /= n * k
    grad_w = np.einsum("nkb,nd->kbd", delta, x)
    grad_b = delta.sum(axis=0)
    return loss, PolicyGradient(grad_w, grad_b)


def _predicted_bins(policy: TokenPolicy, features: np.ndarray) -> np.ndarray:
    return np.argmax(logits(policy, features), axis=-1)


def token_accuracy(policy: TokenPolicy, data: TrainingSet) -> float:
    """Fraction of (sample, dimension) pairs whose argmax bin equals the target."""

    if len(data) == 0:
        raise InputValidationError("token accuracy is undefined on an empty dataset")
    targets = _check_targets(policy, data.targets)
    return float(np.mean(_predicted_bins(policy, data.features) == targets))


def _per_dataset_accuracy(policy: TokenPolicy, data: TrainingSet) -> dict[str, float]:
    if not data.datasets:
        return {}
    hits = _predicted_bins(policy, data.features) == data.targets
    tags = np.asarray(data.datasets)
    return {name: float(hits[tags == name].mean()) for name in sorted(set(data.datasets))}


def train(
    policy: TokenPolicy, data: TrainingSet, cfg: TrainConfig
) -> tuple[TokenPolicy, list[EpochMetrics]]:
    """Mini-batch gradient descent until the epoch budget or target accuracy."""

    n = len(data)
    if n == 0:
        raise InputValidationError("cannot train on an empty dataset")
    _check_targets(policy, data.targets)

    weights = policy.weights.copy()
    biases = policy.biases.copy()
    current = replace(policy, weights=weights, biases=biases)
    rng = np.random.default_rng(cfg.rng_seed)
    history: list[EpochMetrics] = []

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            index = order[start : start + cfg.batch_size]
            _, grad = loss_and_grad(current, data.features[index], data.targets[index])
            weights -= cfg.learning_rate * grad.weights
            biases -= cfg.learning_rate * grad.biases

        loss, _ = loss_and_grad(current, data.features, data.targets)
        if not math.isfinite(loss) or not current.is_finite:
            raise TrainingError(f"loss diverged in epoch {epoch}", epoch=epoch)
        metrics = EpochMetrics(
            epoch=epoch,
            loss=loss,
            token_accuracy=token_accuracy(current, data),
            per_dataset_accuracy=_per_dataset_accuracy(current, data),
            elapsed_s=time.perf_counter() - started,
        )
        history.append(metrics)
        logger.info(
            "epoch %d: loss=%.4f token_accuracy=%.4f", epoch, loss, metrics.token_accuracy
        )
        if metrics.token_accuracy >= cfg.target_token_accuracy:
            logger.info("Target token accuracy %.2f reached", cfg.target_token_accuracy)
            break

    weights.setflags(write=False)
    biases.setflags(write=False)
    return current, history


def decode_bins(policy: TokenPolicy, dim_logits: np.ndarray, codec: ActionCodec) -> np.ndarray:
    """Choose one bin per dimension from ``(n_dims, bins)`` logits."""

    order = np.argsort(-dim_logits, axis=-1, kind="stable")
    greedy = order[:, 0]
    if policy.decode_mode == "greedy":
        return greedy
    second = order[:, 1]
    if policy.decode_mode == "second_best":
        return second
    zero = zero_action_tokens(codec) - codec.token_map.offset
    return second if np.array_equal(greedy, zero) else greedy


def predict(
    policy: TokenPolicy, obs: Sequence[float] | np.ndarray, instruction: str, codec: ActionCodec
) -> tuple[np.ndarray, np.ndarray]:
    """Decode one action; returns ``(action, tokens)``."""

    if not policy.is_finite:
        raise InferenceError("policy parameters are not finite; was it trained?")
    if codec.spec != policy.spec:
        raise InferenceError(f"codec spec {codec.spec} does not match policy spec {policy.spec}")
    features = policy.encoder.encode(obs, instruction)
    bins = decode_bins(policy, logits(policy, features), codec)
    return bins_to_action(codec, bins), bins + codec.token_map.offset


def save_policy(policy: TokenPolicy, path: Path) -> Path:
    payload = {
        "spec": policy.spec.model_dump(),
        "encoder": policy.encoder.model_dump(),
        "decode_mode": policy.decode_mode,
        "weights": policy.weights.tolist(),
        "biases": policy.biases.tolist(),
    }
    return write_document(path, POLICY_FORMAT, POLICY_FORMAT_VERSION, payload)


def load_policy(path: Path, decode_mode: DecodeMode | None = None) -> TokenPolicy:
    payload = read_document(path, POLICY_FORMAT, {POLICY_FORMAT_VERSION})
    try:
        spec = ActionSpec.model_validate(payload["spec"])
        encoder = FeatureEncoder.model_validate(payload["encoder"])
        weights = np.asarray(payload["weights"], dtype=np.float64)
        biases = np.asarray(payload["biases"], dtype=np.float64)
        mode = decode_mode or payload["decode_mode"]
    except (KeyError, ValueError) as exc:
        raise InputValidationError(f"malformed policy checkpoint {path}: {exc}") from exc
    weights.setflags(write=False)
    biases.setflags(write=False)
    return TokenPolicy(spec, encoder, weights, biases, mode)


__all__ = [
    "DECODE_MODES",
    "POLICY_FORMAT",
    "POLICY_FORMAT_VERSION",
    "DecodeMode",
    "EpochMetrics",
    "InferenceError",
    "PolicyGradient",
    "TokenPolicy",
    "TrainConfig",
    "TrainingError",
    "TrainingSet",
    "build_training_set",
    "decode_bins",
    "init_policy",
    "load_policy",
    "logits",
    "loss_and_grad",
    "predict",
    "probabilities",
    "save_policy",
    "token_accuracy",
    "train",
]
