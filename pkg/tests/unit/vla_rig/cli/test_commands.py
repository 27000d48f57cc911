"""CLI tests for the workflow commands."""

import socket
from pathlib import Path

import numpy as np
import pytest
import yaml
from typer.testing import CliRunner

from tests.utils.factories import json_lines, parse_json_output
from vla_rig.cli.app import app
from vla_rig.cli.commands.evaluate import EXIT_INVALID_POLICY
from vla_rig.cli.commands.mixture import parse_dataset_args
from vla_rig.cli.manifest import manifest_path, read_manifest
from vla_rig.common.config import load_config
from vla_rig.common.errors import ConfigurationError
from vla_rig.common.json_log import JsonlLog
from vla_rig.common.logging import setup_logging
from vla_rig.data.episodes import read_episodes
from vla_rig.evaluation.report import load_report
from vla_rig.models.action_codec import load_codec
from vla_rig.models.token_policy import load_policy
from vla_rig.serve.server import start_server

runner = CliRunner()


@pytest.fixture(autouse=True)
def _isolated_dirs(tmp_path: Path, monkeypatch):
    monkeypatch.setenv("VLA_RIG_DATA_ROOT", str(tmp_path / "data"))
    monkeypatch.setenv("VLA_RIG_ARTIFACTS_DIR", str(tmp_path / "artifacts"))
    load_config.cache_clear()
    yield
    load_config.cache_clear()
    setup_logging("INFO")


def invoke(*args: str, expect: int = 0):
    result = runner.invoke(app, [str(a) for a in args])
    assert result.exit_code == expect, result.output
    return result


@pytest.fixture
def dataset(tmp_path: Path) -> Path:
    path = tmp_path / "reach.jsonl"
    invoke("collect", "-n", 4, "--seed", 1, "--out", path)
    return path


@pytest.fixture
def codec_file(tmp_path: Path, dataset: Path) -> Path:
    path = tmp_path / "codec.json"
    invoke("fit-codec", dataset, "--out", path)
    return path


@pytest.fixture
def policy_file(tmp_path: Path, dataset: Path, codec_file: Path) -> Path:
    path = tmp_path / "policy.json"
    invoke("train", dataset, "--codec", codec_file, "--out", path, "--epochs", 2)
    return path


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TestCollect:
    """Demonstration collection."""

    def test_writes_dataset_and_manifest(self, tmp_path: Path):
        out = tmp_path / "d.jsonl"

        summary = parse_json_output(invoke("collect", "-n", 3, "--seed", 2, "--out", out).output)

        assert summary["episodes"] == 3
        assert summary["successes"] == 3
        assert len(read_episodes(out)) == 3
        manifest = read_manifest(Path(summary["manifest"]))
        assert manifest.command == "collect"
        assert manifest.seeds == {"seed": 2}
        assert manifest.artifacts == [str(out)]

    def test_same_seed_same_bytes(self, tmp_path: Path):
        invoke("collect", "-n", 3, "--seed", 5, "--out", tmp_path / "a.jsonl")
        invoke("collect", "-n", 3, "--seed", 5, "--out", tmp_path / "b.jsonl")

        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_zero_episodes_is_header_only(self, tmp_path: Path):
        out = tmp_path / "empty.jsonl"

        invoke("collect", "-n", 0, "--out", out)

        assert out.read_text(encoding="utf-8").splitlines() == [
            '{"format":"vla-episodes","version":1}'
        ]

    def test_initial_noop_and_default_location(self, tmp_path: Path):
        summary = parse_json_output(
            invoke("collect", "-n", 2, "--initial-noop", "--dataset-name", "poisoned").output
        )

        out = Path(summary["out"])
        assert out == (tmp_path / "data" / "poisoned.jsonl").resolve()
        assert all(ep.steps[0].action == [0.0] * 7 for ep in read_episodes(out))


class TestCurate:
    def test_drop_first_counts_one_step_per_episode(self, tmp_path: Path):
        poisoned = tmp_path / "poisoned.jsonl"
        invoke("collect", "-n", 3, "--initial-noop", "--out", poisoned)

        summary = parse_json_output(invoke("curate", poisoned, "--drop-first").output)

        dropped = next(f for f in summary["filters"] if f["name"] == "drop_first_transition")
        assert dropped["episodes_removed"] == 0
        assert dropped["steps_removed"] == 3
        curated = read_episodes(tmp_path / "poisoned.curated.jsonl")
        assert all(ep.steps[0].action != [0.0] * 7 for ep in curated)
        assert read_manifest(Path(summary["manifest"])).inputs[0].path == str(poisoned)

    def test_replayed_expert_episodes_all_pass(self, tmp_path: Path, dataset: Path):
        result = invoke(
            "curate", dataset, "--failed-replays", "--replay", "-o", tmp_path / "c.jsonl"
        )
        summary = parse_json_output(result.output)

        assert summary["episodes_out"] == 4
        assert summary["filters"][1] == {
            "name": "failed_replays",
            "episodes_removed": 0,
            "steps_removed": 0,
        }

    def test_noops_threshold_flag(self, dataset: Path):
        summary = parse_json_output(
            invoke("curate", dataset, "--noops", "--eps-translation", "10").output
        )

        noops = next(f for f in summary["filters"] if f["name"] == "noops")
        assert noops["steps_removed"] > 0

    def test_missing_dataset_is_usage_error(self, tmp_path: Path):
        result = runner.invoke(app, ["curate", str(tmp_path / "none.jsonl")])

        assert result.exit_code != 0


class TestSampleMixture:
    """Mixture draws through the command line."""

    def test_bundled_mixture_after_removal(self, tmp_path: Path):
        out = tmp_path / "draws.jsonl"

        summary = parse_json_output(
            invoke("sample-mixture", "-n", 2000, "--progress", 0.7, "--seed", 3, "-o", out).output
        )

        assert summary["counts"]["droid"] == 0
        assert summary["weights"]["droid"] == 0.0
        assert sum(summary["counts"].values()) == 2000
        assert len(summary["counts"]) == 27
        draws = JsonlLog(out).read_all()
        assert len(draws) == 2000
        assert draws[0]["draw_index"] == 0

    def test_start_regenerates_a_window(self, tmp_path: Path):
        invoke("sample-mixture", "-n", 50, "--seed", 1, "-o", tmp_path / "all.jsonl")
        invoke("sample-mixture", "-n", 10, "--start", 40, "--seed", 1, "-o", tmp_path / "w.jsonl")

        full = JsonlLog(tmp_path / "all.jsonl").read_all()
        window = JsonlLog(tmp_path / "w.jsonl").read_all()
        assert window == full[40:]

    def test_dataset_file_sizes(self, tmp_path: Path, dataset: Path):
        spec = tmp_path / "mix.yaml"
        spec.write_text(
            yaml.safe_dump({"entries": [{"dataset_name": "reach", "weight": 1.0}]}),
            encoding="utf-8",
        )

        invoke(
            "sample-mixture",
            "--spec",
            spec,
            "-d",
            f"reach={dataset}",
            "-n",
            200,
            "-o",
            tmp_path / "d.jsonl",
        )

        indices = {d["episode_index"] for d in JsonlLog(tmp_path / "d.jsonl").read_all()}
        assert indices == {0, 1, 2, 3}

    def test_unknown_dataset_fails(self, dataset: Path):
        result = invoke("sample-mixture", "-d", f"nosuch={dataset}", expect=1)

        assert "not in the mixture" in result.output

    def test_parse_dataset_args(self):
        assert parse_dataset_args(["a=x.jsonl"]) == {"a": Path("x.jsonl")}
        with pytest.raises(ConfigurationError):
            parse_dataset_args(["a"])


class TestFitCodecAndTrain:
    def test_fit_codec(self, codec_file: Path):
        codec = load_codec(codec_file)

        assert codec.spec.bins_per_dim == 256
        assert codec.token_map.offset == 32000 - 256
        assert read_manifest(manifest_path(codec_file)).command == "fit-codec"

    def test_bins_flag(self, tmp_path: Path, dataset: Path):
        summary = parse_json_output(
            invoke("fit-codec", dataset, "--bins", 64, "-o", tmp_path / "c64.json").output
        )

        assert summary["bins_per_dim"] == 64
        assert summary["token_offset"] == 32000 - 64

    def test_train_writes_checkpoint_metrics_and_manifest(
        self, tmp_path: Path, dataset: Path, codec_file: Path
    ):
        out = tmp_path / "p.json"

        result = invoke(
            "train",
            dataset,
            "--codec",
            codec_file,
            "-o",
            out,
            "--epochs",
            2,
            "--target-accuracy",
            1.0,
            "--decode-mode",
            "dynamic",
        )
        summary = parse_json_output(result.output)

        assert summary["epochs_run"] == 2
        assert summary["decode_mode"] == "dynamic"
        assert load_policy(out).decode_mode == "dynamic"
        metrics = JsonlLog(Path(summary["metrics"])).read_all()
        assert [m["epoch"] for m in metrics] == [1, 2]
        manifest = read_manifest(Path(summary["manifest"]))
        assert manifest.config["policy"]["train"]["epochs"] == 2
        names = [Path(a).name for a in manifest.artifacts]
        assert names == ["p.json", "p.json.metrics.jsonl"]

    def test_config_file_and_invalid_override(
        self, tmp_path: Path, dataset: Path, codec_file: Path
    ):
        config = tmp_path / "rig.yaml"
        config.write_text("policy:\n  train:\n    epochs: 1\n", encoding="utf-8")

        result = invoke(
            "train", dataset, "--codec", codec_file, "-o", tmp_path / "p.json", "--config", config
        )
        summary = parse_json_output(result.output)
        failed = invoke("train", dataset, "--codec", codec_file, "--lr", 0, expect=1)

        assert summary["epochs_run"] == 1
        assert "train failed" in failed.output


class TestEvalAndReport:
    """Evaluation plans, exit codes and report rendering."""

    def _plan(self, tmp_path: Path, policies: list[dict]) -> Path:
        plan = tmp_path / "plan.yaml"
        plan.write_text(
            yaml.safe_dump({"n_trials": 2, "t_max": 120, "policies": policies}), encoding="utf-8"
        )
        return plan

    def test_eval_writes_report(self, tmp_path: Path, policy_file: Path, codec_file: Path):
        plan = self._plan(
            tmp_path,
            [
                {"name": "expert", "kind": "expert"},
                {"name": "trained", "checkpoint": policy_file.name, "codec": codec_file.name},
            ],
        )

        summary = parse_json_output(invoke("eval", plan, "--seed", 4).output)

        report = load_report(Path(summary["out"]))
        assert report.master_seed == 4
        assert report.summary("expert").mean == 1.0
        assert report.summary("trained").n == 2
        manifest = read_manifest(Path(summary["manifest"]))
        assert {Path(i.path).name for i in manifest.inputs} == {
            "plan.yaml",
            "policy.json",
            "codec.json",
        }

        table = invoke("report", summary["out"]).output
        assert "expert" in table and "100.0 ± 0.0% (2)" in table
        as_json = invoke("report", summary["out"], "--format", "json").output
        assert parse_json_output(as_json)["n_trials"] == 2

    def test_unreachable_remote_policy_exits_2(self, tmp_path: Path):
        plan = self._plan(
            tmp_path,
            [
                {"name": "expert", "kind": "expert"},
                {"name": "gone", "kind": "remote", "address": f"127.0.0.1:{free_port()}"},
            ],
        )

        result = invoke("eval", plan, "--trials", 1, expect=EXIT_INVALID_POLICY)

        assert "invalid policies: gone" in result.output

    def test_invalid_plan(self, tmp_path: Path):
        plan = self._plan(tmp_path, [{"name": "p", "kind": "checkpoint"}])

        result = invoke("eval", plan, expect=1)

        assert "Invalid eval plan" in result.output

    def test_unknown_report_format(self, tmp_path: Path):
        plan = self._plan(tmp_path, [{"name": "expert", "kind": "expert"}])
        out = tmp_path / "r.json"
        invoke("eval", plan, "-o", out)

        invoke("report", out, "--format", "yaml", expect=1)


class TestServeAndBench:
    def test_serve_for_a_fixed_duration(self, policy_file: Path, codec_file: Path):
        result = invoke(
            "serve",
            "--policy",
            policy_file,
            "--codec",
            codec_file,
            "--bind",
            "127.0.0.1:0",
            "--profile",
            "bf16-sim",
            "--duration",
            0.2,
        )

        started, stopped = json_lines(result.output)[:2]
        assert not started["address"].endswith(":0")
        assert started["injected_delay_us"] == 167_000
        assert stopped == {"address": started["address"], "requests_served": 0}

    def test_unknown_profile(self, policy_file: Path, codec_file: Path):
        result = invoke(
            "serve", "--policy", policy_file, "--codec", codec_file, "--profile", "fp64", expect=1
        )

        assert "Unknown latency profile" in result.output

    def test_bench_reports_rate(self):
        def predictor(obs, instruction):
            return np.zeros(7), np.full(7, 31872)

        with start_server(predictor, "127.0.0.1:0", n_dims=7) as handle:
            summary = parse_json_output(invoke("bench", "-a", handle.address, "-n", 5).output)

        assert summary["count"] == 5
        assert summary["complete"] is True
        assert summary["achieved_hz"] > 0

    def test_bench_without_server_fails(self):
        result = invoke("bench", "-a", f"127.0.0.1:{free_port()}", "-n", 1, expect=1)

        assert "bench failed" in result.output


def test_help_lists_commands():
    result = runner.invoke(app, ["--help"])

    assert result.exit_code == 0
    commands = ("collect", "curate", "sample-mixture", "fit-codec", "train", "serve", "bench")
    for command in (*commands, "eval", "report"):
        assert command in result.output
