"""Codec fitting command."""

from __future__ import annotations

from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_json
from vla_rig.cli.manifest import write_manifest
from vla_rig.cli.options import command_errors, config_option, load_run_config, out_option
from vla_rig.common.config import load_config
from vla_rig.data.episodes import read_episodes
from vla_rig.models.action_codec import TokenMap, fit_codec_from_episodes, save_codec


def fit_codec_command(
    dataset: Path = typer.Argument(..., exists=True, dir_okay=False, help="Dataset file"),
    out: Path | None = out_option("Codec document (JSON)"),
    config: Path | None = config_option(),
    bins: int | None = typer.Option(None, "--bins", min=2, help="Bins per dimension"),
) -> None:
    """Fit per-dimension 1st/99th percentile bounds on a dataset's actions.

    Examples:
        vla-rig fit-codec data/reach.jsonl --out artifacts/codec.json
    """
    with command_errors("fit-codec"):
        rig = load_run_config(config, {"codec.bins_per_dim": bins})
        spec = rig.codec.spec
        token_map = TokenMap(vocab_size=rig.codec.vocab_size, reserved=spec.bins_per_dim)
        codec = fit_codec_from_episodes(read_episodes(dataset), spec, token_map)
        target = out or load_config().artifacts_dir / "codec.json"
        save_codec(codec, target)
        manifest = write_manifest(target, "fit-codec", rig, inputs=[dataset])

    echo_json(
        {
            "out": str(target),
            "manifest": str(manifest),
            "n_dims": spec.n_dims,
            "bins_per_dim": spec.bins_per_dim,
            "token_offset": codec.token_map.offset,
            "q_lo": codec.q_lo.tolist(),
            "q_hi": [d.q_hi for d in codec.per_dim],
        }
    )


__all__ = ["fit_codec_command"]
