"""CLI command modules for the rig.

One module per workflow step:
- collect: scripted-expert demonstrations
- curate: dataset filters
- mixture: weighted mixture sampling
- codec: action codec fitting
- train: token policy training
- serve / bench: inference server and throughput benchmark
- evaluate / report: paired evaluation and report rendering
"""

from __future__ import annotations

from vla_rig.cli.commands.bench import bench_command
from vla_rig.cli.commands.codec import fit_codec_command
from vla_rig.cli.commands.collect import collect
from vla_rig.cli.commands.curate import curate_dataset
from vla_rig.cli.commands.evaluate import eval_command
from vla_rig.cli.commands.mixture import sample_mixture_command
from vla_rig.cli.commands.report import report_command
from vla_rig.cli.commands.serve import serve_command
from vla_rig.cli.commands.train import train_command

__all__ = [
    "bench_command",
    "collect",
    "curate_dataset",
    "eval_command",
    "fit_codec_command",
    "report_command",
    "sample_mixture_command",
    "serve_command",
    "train_command",
]
