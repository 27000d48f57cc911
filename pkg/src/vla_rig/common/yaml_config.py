"""YAML configuration loading with validation.

Files are read with ``yaml.safe_load`` and validated against a pydantic
model supplied by the caller. Models are expected to forbid unknown keys so
typos surface as errors rather than silently falling back to defaults.
"""

from __future__ import annotations

import copy
import hashlib
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from vla_rig.common.errors import ConfigurationError
from vla_rig.common.serialization import canonical_json

ModelT = TypeVar("ModelT", bound=BaseModel)


def config_dir() -> Path:
    """``VLA_RIG_CONFIG_DIR`` if set, else the repository ``config/`` directory."""

    override = os.getenv("VLA_RIG_CONFIG_DIR")
    if override:
        return Path(override).expanduser()
    return Path(__file__).resolve().parent.parent.parent.parent / "config"


def read_yaml(path: Path) -> Mapping[str, Any]:
    """Top-level mapping of a YAML file; an empty file reads as ``{}``."""

    try:
        with Path(path).open(encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Malformed YAML in {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{path} must contain a mapping at top level")
    return data


def validate_config(model: type[ModelT], data: Mapping[str, Any], source: str) -> ModelT:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"Invalid config in {source}: {field}: {first['msg']}") from exc


def load_yaml_config(model: type[ModelT], path: Path) -> ModelT:
    return validate_config(model, read_yaml(path), str(path))


def apply_overrides(config: ModelT, overrides: Mapping[str, Any]) -> ModelT:
    """Return ``config`` with dotted-key overrides applied (``"policy.train.epochs"``).

    ``None`` values are skipped so unset command-line flags leave the file
    value in place.
    """

    if not overrides:
        return config
    data = copy.deepcopy(config.model_dump(mode="json"))
    for dotted, value in overrides.items():
        if value is None:
            continue
        parts = dotted.split(".")
        node = data
        for part in parts[:-1]:
            child = node.get(part) if isinstance(node, dict) else None
            if not isinstance(child, dict):
                raise ConfigurationError(f"Unknown config section in override {dotted!r}")
            node = child
        if parts[-1] not in node:
            raise ConfigurationError(f"Unknown config key in override {dotted!r}")
        node[parts[-1]] = value
    return validate_config(type(config), data, "overrides")


def config_hash(config: BaseModel) -> str:
    """SHA-256 of the canonical JSON form of ``config``."""

    return hashlib.sha256(canonical_json(config.model_dump(mode="json")).encode()).hexdigest()


__all__ = [
    "apply_overrides",
    "config_dir",
    "config_hash",
    "load_yaml_config",
    "read_yaml",
    "validate_config",
]
