"""Throughput benchmark command."""

from __future__ import annotations

from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_error, echo_json
from vla_rig.cli.options import command_errors, config_option, load_run_config, seed_option
from vla_rig.common.config import load_config
from vla_rig.serve.bench import RequestTemplate, bench
from vla_rig.simlab.world import observe, reset


def bench_command(
    address: str | None = typer.Option(None, "--address", "-a", help="Server host:port"),
    count: int | None = typer.Option(None, "--count", "-n", min=1, help="Requests to send"),
    duration: float | None = typer.Option(None, "--duration", min=0.0, help="Seconds to run"),
    warmup: int = typer.Option(1, "--warmup", min=0, help="Untimed requests sent first"),
    seed: int = seed_option(),
    instruction: str | None = typer.Option(None, "--instruction"),
    config: Path | None = config_option(),
) -> None:
    """Measure closed-loop request rate and latency percentiles.

    The request observation is that of the simlab world reset from ``--seed``.
    Defaults to 100 requests when neither ``--count`` nor ``--duration`` is set.

    Examples:
        vla-rig bench --address 127.0.0.1:8765 --count 200
        vla-rig bench -a 127.0.0.1:8765 --duration 10
    """
    with command_errors("bench"):
        rig = load_run_config(config)
        if count is None and duration is None:
            count = 100
        state = reset(seed, rig.sim)
        template = RequestTemplate(
            obs=observe(state, rig.sim).tolist(),
            instruction=instruction or rig.sim.instruction,
        )
        report = bench(
            address or load_config().bind_address,
            template,
            count=count,
            duration_s=duration,
            warmup=warmup,
            timeout=rig.serve.timeout_s,
        )

    echo_json(report.as_dict())
    if not report.complete:
        echo_error(f"benchmark incomplete: {report.error}")
        raise typer.Exit(code=1)


__all__ = ["bench_command"]
