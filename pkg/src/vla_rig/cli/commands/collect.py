"""Demonstration collection command."""

from __future__ import annotations

from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_json
from vla_rig.cli.manifest import write_manifest
from vla_rig.cli.options import (
    command_errors,
    config_option,
    load_run_config,
    out_option,
    seed_option,
)
from vla_rig.common.config import load_config
from vla_rig.data.episodes import count_steps, write_episodes
from vla_rig.simlab.collect import DEFAULT_DATASET, collect_demonstrations


def collect(
    n_episodes: int = typer.Option(50, "--n-episodes", "-n", min=0, help="Episodes to record"),
    seed: int = seed_option(),
    out: Path | None = out_option("Dataset file (JSON lines)"),
    config: Path | None = config_option(),
    initial_noop: bool = typer.Option(
        False,
        "--initial-noop/--no-initial-noop",
        help="Record an all-zero first action in every episode",
    ),
    dataset_name: str = typer.Option(DEFAULT_DATASET, "--dataset-name", help="Dataset tag"),
) -> None:
    """Record scripted-expert demonstrations in simlab.

    Examples:
        vla-rig collect --n-episodes 50 --seed 1 --out data/reach.jsonl
        vla-rig collect -n 50 --initial-noop --out data/poisoned.jsonl
    """
    with command_errors("collect"):
        rig = load_run_config(config)
        target = out or load_config().data_dir / f"{dataset_name}.jsonl"
        episodes = collect_demonstrations(
            n_episodes, seed, rig.sim, initial_noop=initial_noop, dataset_name=dataset_name
        )
        write_episodes(target, episodes)
        manifest = write_manifest(target, "collect", rig, seeds={"seed": seed})

    echo_json(
        {
            "out": str(target),
            "manifest": str(manifest),
            "episodes": len(episodes),
            "steps": count_steps(episodes),
            "successes": sum(bool(ep.meta.success) for ep in episodes),
            "initial_noop": initial_noop,
        }
    )


__all__ = ["collect"]
