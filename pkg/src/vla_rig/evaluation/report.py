"""Rendering and persistence of evaluation reports."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from vla_rig.common.errors import InputValidationError
from vla_rig.common.serialization import parse_document, read_document, write_document
from vla_rig.evaluation.ab_testing import EvalReport

REPORT_FORMAT = "vla-eval-report"
REPORT_FORMAT_VERSION = 1

ReportFormat = Literal["table", "json"]


def format_row(name: str, mean: float, stderr: float, n: int, width: int) -> str:
    return f"{name:<{width}}  {mean * 100:.1f} ± {stderr * 100:.1f}% ({n})"


def render_table(report: EvalReport) -> str:
    """One row per policy, best mean first."""

    width = max([len("policy"), *(len(p.name) for p in report.policies)])
    header = f"{'policy':<{width}}  success ± stderr (n)"
    rows = [
        format_row(p.name, p.mean, p.stderr, p.n, width) + ("  [invalid]" if p.invalid else "")
        for p in sorted(report.policies, key=lambda p: (-p.mean, p.name))
    ]
    return "\n".join([header, *rows])


def render_report(report: EvalReport, fmt: ReportFormat = "table") -> str:
    if fmt == "table":
        return render_table(report)
    if fmt == "json":
        return report.model_dump_json(indent=2)
    raise InputValidationError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> EvalReport:
    """Parse the JSON produced by ``render_report(..., "json")`` or ``save_report``."""

    data = json.loads(text)
    if isinstance(data, dict) and "format" in data:
        data = parse_document(data, REPORT_FORMAT, {REPORT_FORMAT_VERSION})
    return EvalReport.model_validate(data)


def save_report(report: EvalReport, path: Path) -> Path:
    return write_document(
        path, REPORT_FORMAT, REPORT_FORMAT_VERSION, report.model_dump(mode="json"), indent=2
    )


def load_report(path: Path) -> EvalReport:
    return EvalReport.model_validate(
        read_document(path, REPORT_FORMAT, {REPORT_FORMAT_VERSION})
    )


__all__ = [
    "REPORT_FORMAT",
    "REPORT_FORMAT_VERSION",
    "ReportFormat",
    "format_row",
    "load_report",
    "parse_report",
    "render_report",
    "render_table",
    "save_report",
]
