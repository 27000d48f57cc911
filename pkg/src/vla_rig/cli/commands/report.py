"""Report rendering command."""

from __future__ import annotations

from pathlib import Path

import typer

from vla_rig.cli.formatters import echo_text
from vla_rig.cli.options import command_errors
from vla_rig.evaluation.report import load_report, render_report


def report_command(
    report_path: Path = typer.Argument(..., exists=True, dir_okay=False, help="Eval report"),
    fmt: str = typer.Option("table", "--format", "-f", help="table or json"),
) -> None:
    """Render a saved evaluation report.

    Examples:
        vla-rig report artifacts/eval_report.json
        vla-rig report artifacts/eval_report.json --format json
    """
    with command_errors("report"):
        text = render_report(load_report(report_path), fmt)  # type: ignore[arg-type]
    echo_text(text)


__all__ = ["report_command"]
