"""Run configuration assembled from every subsystem's settings.

``config/rig.yaml`` holds one section per subsystem. Each section is a
frozen pydantic model that rejects unknown keys.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from vla_rig.common.yaml_config import config_dir, load_yaml_config
from vla_rig.data.curation import DEFAULT_LAYOUT, DimensionRole, NoOpThresholds
from vla_rig.models.action_codec import ActionSpec
from vla_rig.models.features import DEFAULT_INSTR_DIM
from vla_rig.models.token_policy import DecodeMode, TrainConfig
from vla_rig.serve.server import LATENCY_PRESETS, LatencyProfile
from vla_rig.simlab.rollout import ControlKind
from vla_rig.simlab.world import WorldConfig

CONFIG_FILENAME = "rig.yaml"


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CodecSection(_Section):
    """Action space and vocabulary placement."""

    n_dims: int = Field(default=7, ge=1)
    bins_per_dim: int = Field(default=256, ge=2)
    vocab_size: int = Field(default=32000, ge=1)

    @property
    def spec(self) -> ActionSpec:
        return ActionSpec(n_dims=self.n_dims, bins_per_dim=self.bins_per_dim)


class CurationSection(_Section):
    """Default filters applied by ``curate``."""

    gate: bool = True
    failed_replays: bool = False
    drop_first: bool = False
    noops: bool = False
    thresholds: NoOpThresholds = Field(default_factory=NoOpThresholds)
    layout: tuple[DimensionRole, ...] = DEFAULT_LAYOUT


class PolicySection(_Section):
    instr_dim: int = Field(default=DEFAULT_INSTR_DIM, ge=1)
    decode_mode: DecodeMode = "greedy"
    train: TrainConfig = Field(default_factory=TrainConfig)


class ServeSection(_Section):
    timeout_s: float = Field(default=10.0, gt=0.0)
    connect_attempts: int = Field(default=5, ge=1)
    connect_wait_s: float = Field(default=0.2, ge=0.0)
    profiles: dict[str, LatencyProfile] = Field(default_factory=lambda: dict(LATENCY_PRESETS))


class EvalSection(_Section):
    n_trials: int = Field(default=50, ge=1)
    master_seed: int = Field(default=0, ge=0)
    mode: ControlKind = "blocking"
    max_workers: int = Field(default=1, ge=1)


class RigConfig(_Section):
    """Complete run configuration."""

    version: str = "1.0.0"
    description: str = ""
    codec: CodecSection = Field(default_factory=CodecSection)
    curation: CurationSection = Field(default_factory=CurationSection)
    policy: PolicySection = Field(default_factory=PolicySection)
    sim: WorldConfig = Field(default_factory=WorldConfig)
    serve: ServeSection = Field(default_factory=ServeSection)
    eval: EvalSection = Field(default_factory=EvalSection)


@lru_cache(maxsize=8)
def _load_cached(resolved: str) -> RigConfig:
    return load_yaml_config(RigConfig, Path(resolved))


def load_rig_config(path: Path | None = None) -> RigConfig:
    """Load and validate a run configuration.

    Without ``path`` the bundled ``rig.yaml`` from ``config_dir()`` is used;
    when that file does not exist the built-in defaults apply.
    """

    if path is None:
        default = config_dir() / CONFIG_FILENAME
        if not default.exists():
            return RigConfig()
        path = default
    return _load_cached(str(Path(path).resolve()))


__all__ = [
    "CONFIG_FILENAME",
    "CodecSection",
    "CurationSection",
    "EvalSection",
    "PolicySection",
    "RigConfig",
    "ServeSection",
    "load_rig_config",
]
