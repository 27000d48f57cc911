"""Options and helpers shared by every command."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import typer

from vla_rig.cli.formatters import echo_error
from vla_rig.cli.run_config import RigConfig, load_rig_config
from vla_rig.common.errors import RigError
from vla_rig.common.yaml_config import apply_overrides

logger = logging.getLogger(__name__)

CONFIG_HELP = "Run configuration YAML (defaults to config/rig.yaml)"
OUT_HELP = "Output path"
SEED_HELP = "Seed for every random choice the command makes"


def config_option() -> Any:
    return typer.Option(None, "--config", "-c", help=CONFIG_HELP, dir_okay=False)


def out_option(help_text: str = OUT_HELP) -> Any:
    return typer.Option(None, "--out", "-o", help=help_text, dir_okay=False)


def seed_option(default: int = 0) -> Any:
    return typer.Option(default, "--seed", min=0, help=SEED_HELP)


def load_run_config(
    config: Path | None, overrides: Mapping[str, Any] | None = None
) -> RigConfig:
    """Config file merged with flag overrides; flags win."""

    rig = load_rig_config(config)
    return apply_overrides(rig, overrides or {})


@contextmanager
def command_errors(command: str) -> Iterator[None]:
    """Turn rig and I/O errors into a red message and exit code 1."""

    try:
        yield
    except (RigError, OSError) as exc:
        logger.debug("%s failed", command, exc_info=True)
        echo_error(f"{command} failed: {exc}")
        raise typer.Exit(code=1) from exc


__all__ = [
    "command_errors",
    "config_option",
    "load_run_config",
    "out_option",
    "seed_option",
]
