"""Dataset curation command."""

from __future__ import annotations

from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_json, echo_warning
from vla_rig.cli.manifest import write_manifest
from vla_rig.cli.options import command_errors, config_option, load_run_config, out_option
from vla_rig.data.curation import CurationOptions, curate
from vla_rig.data.episodes import read_episodes, write_episodes
from vla_rig.simlab.collect import replay_episode


def _default_out(dataset: Path) -> Path:
    return dataset.with_name(f"{dataset.stem}.curated.jsonl")


def curate_dataset(
    dataset: Path = typer.Argument(..., exists=True, dir_okay=False, help="Dataset file"),
    out: Path | None = out_option("Curated dataset (defaults to <dataset>.curated.jsonl)"),
    config: Path | None = config_option(),
    gate: bool | None = typer.Option(
        None, "--gate/--no-gate", help="Keep only single-arm, third-person episodes"
    ),
    failed_replays: bool | None = typer.Option(
        None, "--failed-replays/--no-failed-replays", help="Drop unsuccessful episodes"
    ),
    replay: bool = typer.Option(
        False, "--replay", help="Decide success by re-simulating instead of meta.success"
    ),
    drop_first: bool | None = typer.Option(
        None, "--drop-first/--no-drop-first", help="Drop the first transition of each episode"
    ),
    noops: bool | None = typer.Option(None, "--noops/--no-noops", help="Remove no-op steps"),
    eps_translation: float | None = typer.Option(None, "--eps-translation", min=0.0),
    eps_rotation: float | None = typer.Option(None, "--eps-rotation", min=0.0),
    eps_gripper: float | None = typer.Option(None, "--eps-gripper", min=0.0),
) -> None:
    """Apply curation filters and report what each removed.

    Flags override the ``curation`` section of the run config.

    Examples:
        vla-rig curate data/poisoned.jsonl --drop-first
        vla-rig curate data/raw.jsonl --noops --eps-translation 1e-3 --out data/clean.jsonl
    """
    with command_errors("curate"):
        rig = load_run_config(
            config,
            {
                "curation.gate": gate,
                "curation.failed_replays": failed_replays,
                "curation.drop_first": drop_first,
                "curation.noops": noops,
                "curation.thresholds.eps_translation": eps_translation,
                "curation.thresholds.eps_rotation": eps_rotation,
                "curation.thresholds.eps_gripper": eps_gripper,
            },
        )
        options = CurationOptions.model_validate(rig.curation.model_dump())
        episodes = read_episodes(dataset)
        flags = None
        if options.failed_replays and replay:
            flags = [replay_episode(episode, rig.sim) for episode in episodes]
        kept, summary = curate(episodes, options, flags)

        target = out or _default_out(dataset)
        write_episodes(target, kept)
        manifest = write_manifest(target, "curate", rig, inputs=[dataset])

    for warning in summary.warnings:
        echo_warning(warning)
    echo_json({"out": str(target), "manifest": str(manifest), **summary.as_dict()})


__all__ = ["curate_dataset"]
