"""Policy training command."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_json, echo_warning
from vla_rig.cli.manifest import write_manifest
from vla_rig.cli.options import command_errors, config_option, load_run_config, out_option
from vla_rig.common.config import load_config
from vla_rig.common.json_log import JsonlLog
from vla_rig.common.performance import timer
from vla_rig.data.episodes import read_episodes
from vla_rig.models.action_codec import load_codec
from vla_rig.models.features import FeatureEncoder
from vla_rig.models.token_policy import build_training_set, init_policy, save_policy, train
from vla_rig.simlab.world import OBS_DIM


def train_command(
    dataset: Path = typer.Argument(..., exists=True, dir_okay=False, help="Dataset file"),
    codec_path: Path = typer.Option(..., "--codec", exists=True, dir_okay=False, help="Codec"),
    out: Path | None = out_option("Policy checkpoint (JSON)"),
    config: Path | None = config_option(),
    seed: int | None = typer.Option(None, "--seed", min=0, help="Shuffling and init seed"),
    epochs: int | None = typer.Option(None, "--epochs", min=1),
    learning_rate: float | None = typer.Option(None, "--lr", min=0.0),
    batch_size: int | None = typer.Option(None, "--batch-size", min=1),
    target_accuracy: float | None = typer.Option(
        None, "--target-accuracy", min=0.0, max=1.0, help="Stop once token accuracy reaches this"
    ),
    decode_mode: str | None = typer.Option(
        None, "--decode-mode", help="greedy, second_best or dynamic"
    ),
) -> None:
    """Train the token policy with cross-entropy on action tokens.

    Per-epoch metrics are written to ``<out>.metrics.jsonl``.

    Examples:
        vla-rig train data/reach.jsonl --codec artifacts/codec.json --out artifacts/policy.json
        vla-rig train data/reach.jsonl --codec artifacts/codec.json --epochs 40 --seed 2
    """
    with command_errors("train"):
        rig = load_run_config(
            config,
            {
                "policy.train.rng_seed": seed,
                "policy.train.epochs": epochs,
                "policy.train.learning_rate": learning_rate,
                "policy.train.batch_size": batch_size,
                "policy.train.target_token_accuracy": target_accuracy,
                "policy.decode_mode": decode_mode,
            },
        )
        codec = load_codec(codec_path)
        encoder = FeatureEncoder(obs_dim=OBS_DIM, instr_dim=rig.policy.instr_dim)
        data = build_training_set(read_episodes(dataset), encoder, codec)
        cfg = rig.policy.train
        policy = init_policy(codec.spec, encoder, cfg, rig.policy.decode_mode)
        with timer(f"train ({len(data)} samples)") as watch:
            trained, history = train(policy, data, cfg)

        target = out or load_config().artifacts_dir / "policy.json"
        save_policy(trained, target)
        metrics_path = target.with_name(target.name + ".metrics.jsonl")
        metrics_log = JsonlLog(metrics_path)
        metrics_log.clear()
        metrics_log.extend([asdict(m) for m in history])
        manifest = write_manifest(
            target,
            "train",
            rig,
            seeds={"rng_seed": cfg.rng_seed},
            inputs=[dataset, codec_path],
            extra_artifacts=[metrics_path],
        )

    final = history[-1]
    reached = final.token_accuracy >= cfg.target_token_accuracy
    if not reached:
        echo_warning(
            f"token accuracy {final.token_accuracy:.4f} below target "
            f"{cfg.target_token_accuracy:.2f} after {final.epoch} epochs"
        )
    echo_json(
        {
            "out": str(target),
            "manifest": str(manifest),
            "metrics": str(metrics_path),
            "samples": len(data),
            "epochs_run": final.epoch,
            "loss": final.loss,
            "token_accuracy": final.token_accuracy,
            "per_dataset_accuracy": final.per_dataset_accuracy,
            "reached_target": reached,
            "decode_mode": trained.decode_mode,
            "elapsed_s": watch.elapsed,
        }
    )


__all__ = ["train_command"]
