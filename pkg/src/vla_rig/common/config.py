"""Environment-driven runtime settings.

Centralises resolution of the data and artifact directories and the default
server bind address so the collector, trainer, server and evaluation harness
agree on locations. Values can be customised through environment variables
and default to workspace-relative paths. The loader caches the resolved
values.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from vla_rig.common.errors import ConfigurationError

_DEFAULT_DATA = Path("data")
_DEFAULT_ARTIFACTS = Path("artifacts")
_DEFAULT_BIND = "127.0.0.1:8765"


@dataclass(frozen=True)
class StoragePaths:
    """Resolved filesystem locations used by the pipeline."""

    data: Path
    artifacts: Path


@dataclass(frozen=True)
class AppConfig:
    """Process-level settings that do not belong in a run config file."""

    storage: StoragePaths
    bind_address: str = _DEFAULT_BIND

    @property
    def data_dir(self) -> Path:
        return self.storage.data

    @property
    def artifacts_dir(self) -> Path:
        return self.storage.artifacts


def _resolve_path(env_var: str, fallback: Path) -> Path:
    """Resolve a directory from an environment variable or use the fallback.

    The directory is created if it does not yet exist so downstream code can
    assume the location is writable.
    """

    raw_value = os.getenv(env_var)
    base_path = Path(raw_value).expanduser() if raw_value else fallback
    base_path.mkdir(parents=True, exist_ok=True)
    return base_path.resolve()


def parse_address(address: str) -> tuple[str, int]:
    """Split ``host:port`` into its parts."""

    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ConfigurationError(f"Address must look like host:port, got {address!r}")
    try:
        port_number = int(port)
    except ValueError as exc:
        raise ConfigurationError(f"Invalid port in address {address!r}") from exc
    if not 0 <= port_number <= 65535:
        raise ConfigurationError(f"Port out of range in address {address!r}")
    return host, port_number


@lru_cache(maxsize=1)
def load_config() -> AppConfig:
    """Load and cache the application configuration."""

    storage = StoragePaths(
        data=_resolve_path("VLA_RIG_DATA_ROOT", _DEFAULT_DATA),
        artifacts=_resolve_path("VLA_RIG_ARTIFACTS_DIR", _DEFAULT_ARTIFACTS),
    )
    bind_address = os.getenv("VLA_RIG_BIND", _DEFAULT_BIND)
    parse_address(bind_address)
    return AppConfig(storage=storage, bind_address=bind_address)


__all__ = ["AppConfig", "StoragePaths", "load_config", "parse_address"]
