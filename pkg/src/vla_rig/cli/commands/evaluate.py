"""Policy evaluation command."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import typer
import yaml
from pydantic import ValidationError

from vla_rig.cli.formatters import echo_json, echo_warning
from vla_rig.cli.manifest import write_manifest
from vla_rig.cli.options import command_errors, config_option, load_run_config, out_option
from vla_rig.cli.run_config import RigConfig
from vla_rig.common.config import load_config
from vla_rig.common.errors import ConfigurationError
from vla_rig.evaluation.ab_testing import EvalPlan, run_eval
from vla_rig.evaluation.report import save_report

EXIT_INVALID_POLICY = 2


def load_eval_plan(
    path: Path, rig: RigConfig, overrides: dict[str, Any] | None = None
) -> EvalPlan:
    """Plan file merged over the ``eval`` and ``sim`` config sections.

    Relative artifact paths in the plan resolve against the plan's directory.
    """

    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Malformed eval plan {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must contain a mapping at top level")

    merged: dict[str, Any] = {
        **rig.eval.model_dump(),
        "control_hz": rig.sim.control_hz,
        "world": rig.sim.model_dump(),
        **data,
    }
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    base = Path(path).parent
    for entry in merged.get("policies") or []:
        if not isinstance(entry, dict):
            continue
        for key in ("checkpoint", "codec"):
            if entry.get(key) is not None and not Path(entry[key]).is_absolute():
                entry[key] = str(base / entry[key])
    try:
        return EvalPlan.model_validate(merged)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"Invalid eval plan {path}: {field}: {first['msg']}") from exc


def _plan_inputs(plan_path: Path, plan: EvalPlan) -> list[Path]:
    paths = [plan_path]
    for entry in plan.policies:
        paths.extend(p for p in (entry.checkpoint, entry.codec) if p is not None)
    return paths


def eval_command(
    plan_path: Path = typer.Argument(..., exists=True, dir_okay=False, help="Eval plan YAML/JSON"),
    out: Path | None = out_option("Evaluation report (JSON)"),
    config: Path | None = config_option(),
    seed: int | None = typer.Option(None, "--seed", min=0, help="Master seed for trial states"),
    trials: int | None = typer.Option(None, "--trials", min=1),
    mode: str | None = typer.Option(None, "--mode", help="blocking or non_blocking"),
    workers: int | None = typer.Option(None, "--workers", min=1, help="Trials run in parallel"),
) -> None:
    """Run a paired evaluation and write the report.

    Exits with code 2 when any policy could not complete a single trial.

    Examples:
        vla-rig eval plans/ab.yaml --trials 50 --seed 7 --out artifacts/report.json
        vla-rig eval plans/remote.yaml --mode non_blocking
    """
    with command_errors("eval"):
        rig = load_run_config(config)
        plan = load_eval_plan(
            plan_path,
            rig,
            {"master_seed": seed, "n_trials": trials, "mode": mode, "max_workers": workers},
        )
        report = run_eval(plan)
        target = out or load_config().artifacts_dir / "eval_report.json"
        save_report(report, target)
        manifest = write_manifest(
            target,
            "eval",
            rig,
            seeds={"master_seed": plan.master_seed},
            inputs=_plan_inputs(plan_path, plan),
        )

    echo_json(
        {
            "out": str(target),
            "manifest": str(manifest),
            "task_name": report.task_name,
            "mode": report.mode,
            "n_trials": report.n_trials,
            "policies": [p.model_dump() for p in report.policies],
        }
    )
    if report.any_invalid:
        invalid = [p.name for p in report.policies if p.invalid]
        echo_warning(f"invalid policies: {', '.join(invalid)}")
        raise typer.Exit(code=EXIT_INVALID_POLICY)


__all__ = ["EXIT_INVALID_POLICY", "eval_command", "load_eval_plan"]
