"""Mixture sampling command."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_json, echo_warning
from vla_rig.cli.manifest import write_manifest
from vla_rig.cli.options import (
    command_errors,
    config_option,
    load_run_config,
    out_option,
    seed_option,
)
from vla_rig.common.config import load_config
from vla_rig.common.errors import ConfigurationError
from vla_rig.common.json_log import JsonlLog
from vla_rig.common.yaml_config import config_dir
from vla_rig.data.episodes import Episode, read_episodes
from vla_rig.data.mixture import active_weights, draw_batch, load_mixture_spec, mixture_report

DEFAULT_MIXTURE = Path("mixtures") / "openx_magic_soup.json"


def parse_dataset_args(values: list[str]) -> dict[str, Path]:
    """``NAME=PATH`` pairs to a mapping."""

    parsed: dict[str, Path] = {}
    for value in values:
        name, sep, path = value.partition("=")
        if not sep or not name or not path:
            raise ConfigurationError(f"--dataset expects NAME=PATH, got {value!r}")
        parsed[name] = Path(path)
    return parsed


def sample_mixture_command(
    spec_path: Path | None = typer.Option(
        None, "--spec", dir_okay=False, help="Mixture spec (defaults to the bundled mixture)"
    ),
    dataset: list[str] | None = typer.Option(
        None, "--dataset", "-d", help="NAME=PATH of a dataset file; repeatable"
    ),
    assume_size: int = typer.Option(
        1, "--assume-size", min=1, help="Episode count assumed for datasets without a file"
    ),
    count: int = typer.Option(1000, "--count", "-n", min=0, help="Number of draws"),
    progress: float = typer.Option(
        0.0, "--progress", min=0.0, max=1.0, help="Training progress in [0, 1]"
    ),
    start: int = typer.Option(0, "--start", min=0, help="Index of the first draw"),
    seed: int = seed_option(),
    out: Path | None = out_option("Draws as JSON lines"),
    config: Path | None = config_option(),
) -> None:
    """Draw episode references from a weighted dataset mixture.

    Draw ``i`` depends only on the seed, ``i`` and the progress, so any
    window of the stream can be regenerated with ``--start``.

    Examples:
        vla-rig sample-mixture --count 100000 --seed 3
        vla-rig sample-mixture --progress 0.7 -d bridge=data/bridge.jsonl --out draws.jsonl
    """
    with command_errors("sample-mixture"):
        rig = load_run_config(config)
        source = spec_path or config_dir() / DEFAULT_MIXTURE
        spec = load_mixture_spec(source)
        files = parse_dataset_args(dataset or [])
        unknown = sorted(set(files) - set(spec.names))
        if unknown:
            raise ConfigurationError(f"datasets not in the mixture: {unknown}")
        loaded: dict[str, list[Episode]] = {name: read_episodes(p) for name, p in files.items()}
        sizes = {name: len(loaded[name]) if name in loaded else assume_size for name in spec.names}

        chosen, episode_index = draw_batch(spec, sizes, progress, seed, start, count)
        target = out or load_config().artifacts_dir / "mixture_draws.jsonl"
        log = JsonlLog(target)
        log.clear()
        log.extend(
            [
                {
                    "draw_index": start + i,
                    "dataset_name": spec.names[int(c)],
                    "episode_index": int(e),
                }
                for i, (c, e) in enumerate(zip(chosen, episode_index, strict=True))
            ]
        )
        manifest = write_manifest(
            target,
            "sample-mixture",
            rig,
            seeds={"seed": seed},
            inputs=[source, *files.values()],
        )
        report = mixture_report(spec, loaded)
        weights = active_weights(spec, progress)

    tally = Counter(spec.names[int(c)] for c in chosen)
    if loaded:
        for warning in report.warnings:
            echo_warning(warning)
    echo_json(
        {
            "out": str(target),
            "manifest": str(manifest),
            "draws": count,
            "start": start,
            "progress": progress,
            "counts": {name: tally.get(name, 0) for name in spec.names},
            "weights": {name: float(w) for name, w in zip(spec.names, weights, strict=True)},
            "normalized": report.normalized,
        }
    )


__all__ = ["parse_dataset_args", "sample_mixture_command"]
