"""Typer CLI entry point for the rig.

Each workflow step is a top-level command; JSON summaries go to stdout and
logs to stderr.
"""

from __future__ import annotations

import typer

from vla_rig.cli.commands import (
    bench_command,
    collect,
    curate_dataset,
    eval_command,
    fit_codec_command,
    report_command,
    sample_mixture_command,
    serve_command,
    train_command,
)
from vla_rig.common.logging import setup_logging

app = typer.Typer(
    help="Desk-scale rig for tokenized robot-action policies",
    no_args_is_help=True,
)


@app.callback()
def configure(
    log_level: str = typer.Option("INFO", "--log-level", help="Log level for stderr output"),
) -> None:
    setup_logging(log_level)


app.command("collect", help="Record scripted-expert demonstrations")(collect)
app.command("curate", help="Filter a dataset")(curate_dataset)
app.command("sample-mixture", help="Sample from a weighted dataset mixture")(
    sample_mixture_command
)
app.command("fit-codec", help="Fit the action codec")(fit_codec_command)
app.command("train", help="Train the token policy")(train_command)
app.command("serve", help="Serve a policy over TCP")(serve_command)
app.command("bench", help="Benchmark a running server")(bench_command)
app.command("eval", help="Run a paired policy evaluation")(eval_command)
app.command("report", help="Render an evaluation report")(report_command)


def main() -> None:  # pragma: no cover
    """Main CLI entrypoint."""
    app()


if __name__ == "__main__":  # pragma: no cover
    main()
