"""Paired A/B evaluation of policies in simlab.

Trial ``i`` starts every policy from the world seeded with
``derive_seed(master_seed, i)``, so all arms face identical initial states.
An endpoint that fails during a trial scores 0 for that trial with the
failure as its reason, and the run carries on; a policy whose every trial
failed is marked invalid.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from vla_rig.common.errors import ConfigurationError, RigError
from vla_rig.common.performance import timer
from vla_rig.common.seeding import derive_seed
from vla_rig.evaluation.statistics import aggregate
from vla_rig.models.action_codec import ActionCodec, load_codec
from vla_rig.models.token_policy import DecodeMode, load_policy
from vla_rig.serve.client import PolicyClient, RemoteEndpoint
from vla_rig.simlab.rollout import (
    ControlKind,
    ControllerMode,
    ExpertEndpoint,
    LocalPolicyEndpoint,
    PolicyEndpoint,
    RolloutResult,
    rollout,
)
from vla_rig.simlab.world import WorldConfig

logger = logging.getLogger(__name__)

EndpointFactory = Callable[[], PolicyEndpoint]


class PolicyEntry(BaseModel):
    """One arm of the comparison."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    kind: Literal["expert", "checkpoint", "remote"] = "checkpoint"
    checkpoint: Path | None = None
    codec: Path | None = None
    address: str | None = None
    decode_mode: DecodeMode | None = None
    policy_hz: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_sources(self) -> PolicyEntry:
        if self.kind == "checkpoint" and (self.checkpoint is None or self.codec is None):
            raise ValueError(f"policy {self.name!r}: checkpoint entries need checkpoint and codec")
        if self.kind == "remote" and self.address is None:
            raise ValueError(f"policy {self.name!r}: remote entries need an address")
        return self


class EvalPlan(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    task_name: str = "simlab-reach"
    n_trials: int = Field(default=50, ge=1)
    master_seed: int = Field(default=0, ge=0)
    mode: ControlKind = "blocking"
    control_hz: float = Field(default=5.0, gt=0.0)
    t_max: int | None = Field(default=None, ge=1)
    max_workers: int = Field(default=1, ge=1)
    world: WorldConfig = Field(default_factory=WorldConfig)
    policies: tuple[PolicyEntry, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_names(self) -> EvalPlan:
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ValueError("policy names in an eval plan must be unique")
        return self

    def controller_for(self, entry: PolicyEntry) -> ControllerMode:
        return ControllerMode(
            mode=self.mode, control_hz=self.control_hz, policy_hz=entry.policy_hz
        )


class RolloutRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: str
    trial_index: int
    seed: int
    score: float
    reason: str
    initial_state: dict[str, object]
    frozen: bool = False
    predictions: int = 0
    ticks: int = 0
    mean_latency_ms: float = 0.0
    error: bool = False


class PolicySummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    mean: float
    stderr: float
    n: int
    frozen: int
    errors: int
    invalid: bool
    mean_latency_ms: float


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    task_name: str
    master_seed: int
    mode: str
    n_trials: int
    policies: list[PolicySummary]
    scores: dict[str, list[float]]
    records: list[RolloutRecord]

    @property
    def any_invalid(self) -> bool:
        return any(p.invalid for p in self.policies)

    def summary(self, name: str) -> PolicySummary:
        for policy in self.policies:
            if policy.name == name:
                return policy
        raise KeyError(name)

    def score_frame(self) -> pd.DataFrame:
        """Trials as rows, policies as columns."""
        frame = pd.DataFrame(self.scores)
        frame.index.name = "trial_index"
        return frame


def trial_seeds(master_seed: int, n_trials: int) -> list[int]:
    return [derive_seed(master_seed, index) for index in range(n_trials)]


def _codec_for(entry: PolicyEntry) -> ActionCodec | None:
    return load_codec(entry.codec) if entry.codec is not None else None


def build_endpoint_factory(entry: PolicyEntry, world: WorldConfig) -> EndpointFactory:
    """Factory producing the endpoint for one trial.

    Checkpoints are loaded once and shared; remote entries open one
    connection per trial.
    """

    if entry.kind == "expert":
        codec = _codec_for(entry)
        return lambda: ExpertEndpoint(cfg=world, codec=codec, name=entry.name)
    if entry.kind == "checkpoint":
        assert entry.checkpoint is not None and entry.codec is not None
        policy = load_policy(entry.checkpoint, decode_mode=entry.decode_mode)
        codec = load_codec(entry.codec)
        return lambda: LocalPolicyEndpoint(policy=policy, codec=codec, name=entry.name)

    assert entry.address is not None
    address = entry.address
    return lambda: RemoteEndpoint(PolicyClient.connect(address), name=entry.name)


def _record(
    name: str, trial_index: int, seed: int, result: RolloutResult, initial: dict[str, object]
) -> RolloutRecord:
    latencies = result.latencies_s
    return RolloutRecord(
        policy=name,
        trial_index=trial_index,
        seed=seed,
        score=result.outcome.score,
        reason=result.outcome.reason,
        initial_state=initial,
        frozen=result.frozen,
        predictions=result.predictions,
        ticks=result.final_state.tick,
        mean_latency_ms=float(np.mean(latencies) * 1000) if latencies else 0.0,
    )


def _run_trial(
    plan: EvalPlan,
    factories: dict[str, EndpointFactory],
    codecs: dict[str, ActionCodec | None],
    trial_index: int,
    seed: int,
) -> list[RolloutRecord]:
    records = []
    for entry in plan.policies:
        try:
            endpoint = factories[entry.name]()
            try:
                result = rollout(
                    endpoint,
                    seed,
                    plan.controller_for(entry),
                    plan.t_max,
                    plan.world,
                    codec=codecs[entry.name],
                )
            finally:
                client = getattr(endpoint, "client", None)
                if client is not None:
                    client.close()
        except (RigError, OSError) as exc:
            logger.warning("Trial %d of %s failed: %s", trial_index, entry.name, exc)
            records.append(
                RolloutRecord(
                    policy=entry.name,
                    trial_index=trial_index,
                    seed=seed,
                    score=0.0,
                    reason=f"endpoint error: {exc}",
                    initial_state={},
                    error=True,
                )
            )
            continue
        initial = asdict(result.initial_state)
        records.append(_record(entry.name, trial_index, seed, result, initial))
    return records


def _summarize(plan: EvalPlan, records: Sequence[RolloutRecord]) -> EvalReport:
    summaries = []
    scores: dict[str, list[float]] = {}
    for entry in plan.policies:
        own = [r for r in records if r.policy == entry.name]
        stats = aggregate([r.score for r in own])
        errors = sum(r.error for r in own)
        completed = [r for r in own if not r.error]
        summaries.append(
            PolicySummary(
                name=entry.name,
                mean=stats.mean,
                stderr=stats.stderr,
                n=stats.n,
                frozen=sum(r.frozen for r in own),
                errors=errors,
                invalid=not completed,
                mean_latency_ms=float(np.mean([r.mean_latency_ms for r in completed]))
                if completed
                else 0.0,
            )
        )
        scores[entry.name] = [r.score for r in own]
    return EvalReport(
        task_name=plan.task_name,
        master_seed=plan.master_seed,
        mode=plan.mode,
        n_trials=plan.n_trials,
        policies=summaries,
        scores=scores,
        records=list(records),
    )


def run_eval(
    plan: EvalPlan, factories: dict[str, EndpointFactory] | None = None
) -> EvalReport:
    """Roll out every policy on every trial and aggregate.

    ``factories`` replaces the endpoints built from the plan entries, keyed
    by policy name.
    """

    codecs: dict[str, ActionCodec | None] = {}
    built: dict[str, EndpointFactory] = dict(factories or {})
    for entry in plan.policies:
        try:
            codecs[entry.name] = _codec_for(entry)
            if entry.name not in built:
                built[entry.name] = build_endpoint_factory(entry, plan.world)
        except (RigError, OSError) as exc:
            raise ConfigurationError(f"Cannot prepare policy {entry.name!r}: {exc}") from exc

    seeds = trial_seeds(plan.master_seed, plan.n_trials)
    with timer(f"eval {plan.task_name} ({plan.n_trials} trials)"):
        if plan.max_workers > 1:
            with ThreadPoolExecutor(max_workers=plan.max_workers) as pool:
                per_trial = list(
                    pool.map(
                        lambda item: _run_trial(plan, built, codecs, item[0], item[1]),
                        enumerate(seeds),
                    )
                )
        else:
            per_trial = [
                _run_trial(plan, built, codecs, index, seed) for index, seed in enumerate(seeds)
            ]

    records = [record for trial in per_trial for record in trial]
    report = _summarize(plan, records)
    for summary in report.policies:
        logger.info(
            "%s: %.1f%% +/- %.1f%% over %d trials (%d frozen)",
            summary.name,
            summary.mean * 100,
            summary.stderr * 100,
            summary.n,
            summary.frozen,
        )
    return report


__all__ = [
    "EndpointFactory",
    "EvalPlan",
    "EvalReport",
    "PolicyEntry",
    "PolicySummary",
    "RolloutRecord",
    "build_endpoint_factory",
    "run_eval",
    "trial_seeds",
]
