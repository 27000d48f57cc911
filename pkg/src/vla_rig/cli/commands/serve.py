"""Inference server command."""

from __future__ import annotations

import time
from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_json
from vla_rig.cli.options import command_errors, config_option, load_run_config
from vla_rig.common.config import load_config
from vla_rig.common.json_log import JsonlLog
from vla_rig.models.action_codec import load_codec
from vla_rig.models.token_policy import load_policy
from vla_rig.serve.server import LatencyProfile, resolve_profile, serve


def serve_command(
    policy_path: Path = typer.Option(..., "--policy", exists=True, dir_okay=False),
    codec_path: Path = typer.Option(..., "--codec", exists=True, dir_okay=False),
    bind: str | None = typer.Option(
        None, "--bind", help="host:port to listen on (default: VLA_RIG_BIND or 127.0.0.1:8765)"
    ),
    profile: str = typer.Option("none", "--profile", help="Latency profile name"),
    delay_us: int | None = typer.Option(
        None, "--delay-us", min=0, help="Custom injected delay; overrides --profile"
    ),
    decode_mode: str | None = typer.Option(None, "--decode-mode"),
    latency_log: Path | None = typer.Option(
        None, "--latency-log", dir_okay=False, help="Append per-request latencies here"
    ),
    duration: float | None = typer.Option(
        None, "--duration", min=0.0, help="Stop after this many seconds (default: run until ^C)"
    ),
    config: Path | None = config_option(),
) -> None:
    """Serve a trained policy over framed TCP.

    Prints one JSON line with the bound address once listening and another
    with the request count on shutdown.

    Examples:
        vla-rig serve --policy artifacts/policy.json --codec artifacts/codec.json
        vla-rig serve --policy p.json --codec c.json --bind 0.0.0.0:9000 --profile bf16-sim
    """
    with command_errors("serve"):
        rig = load_run_config(config, {"policy.decode_mode": decode_mode})
        if delay_us is not None:
            chosen = LatencyProfile(label="custom", injected_delay_us=delay_us)
        else:
            chosen = resolve_profile(profile, rig.serve.profiles)
        policy = load_policy(policy_path, decode_mode=decode_mode)
        codec = load_codec(codec_path)
        log = JsonlLog(latency_log) if latency_log is not None else None
        handle = serve(policy, codec, bind or load_config().bind_address, chosen, latency_log=log)

    with handle:
        echo_json(
            {
                "address": handle.address,
                "profile": chosen.label,
                "injected_delay_us": chosen.injected_delay_us,
                "decode_mode": policy.decode_mode,
            },
            indent=None,
        )
        try:
            if duration is None:
                handle.wait()
            else:
                time.sleep(duration)
        except KeyboardInterrupt:
            pass
        served = handle.requests_served
    echo_json({"address": handle.address, "requests_served": served}, indent=None)


__all__ = ["serve_command"]
