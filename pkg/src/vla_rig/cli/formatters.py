"""Shared output formatting utilities for CLI commands.

stdout carries the JSON summaries of successful commands; every
human-oriented message goes to stderr.
"""

from __future__ import annotations

import json
from typing import Any

import typer


def echo_json(data: dict[str, Any], indent: int | None = 2) -> None:
    """Format and echo JSON data to stdout.

    Args:
        data: Dictionary to format as JSON
        indent: Number of spaces for indentation (default: 2); None prints one line
    """
    typer.echo(json.dumps(data, indent=indent, default=str))


def echo_error(message: str) -> None:
    """Echo an error message in red on stderr."""
    typer.secho(message, fg=typer.colors.RED, err=True)


def echo_warning(message: str) -> None:
    typer.secho(message, fg=typer.colors.YELLOW, err=True)


def echo_text(text: str) -> None:
    """Echo rendered text (tables, reports) to stdout."""
    typer.echo(text)


__all__ = [
    "echo_error",
    "echo_json",
    "echo_text",
    "echo_warning",
]
