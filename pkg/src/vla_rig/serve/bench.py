"""Closed-loop throughput benchmark.

Requests are sent back to back with exactly one in flight, the way a robot
control loop queries its policy. ``achieved_hz`` is completed requests
divided by elapsed wall-clock time; percentiles are of the client-observed
round trip.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from vla_rig.common.errors import InputValidationError
from vla_rig.serve.client import DEFAULT_TIMEOUT_S, PolicyClient
from vla_rig.serve.protocol import TransportError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RequestTemplate:
    obs: Sequence[float]
    instruction: str


@dataclass(frozen=True)
class BenchReport:
    achieved_hz: float
    p50_us: float
    p99_us: float
    count: int
    elapsed_s: float
    mean_server_latency_us: float
    complete: bool
    error: str | None = None

    def as_dict(self) -> dict[str, object]:
        return asdict(self)


def summarize(
    round_trips_us: Sequence[float],
    server_us: Sequence[float],
    elapsed_s: float,
    complete: bool,
    error: str | None,
) -> BenchReport:
    count = len(round_trips_us)
    if count:
        p50, p99 = np.percentile(np.asarray(round_trips_us, dtype=np.float64), [50, 99])
        server_mean = float(np.mean(server_us))
    else:
        p50 = p99 = server_mean = 0.0
    return BenchReport(
        achieved_hz=count / elapsed_s if elapsed_s > 0 else 0.0,
        p50_us=float(p50),
        p99_us=float(p99),
        count=count,
        elapsed_s=elapsed_s,
        mean_server_latency_us=server_mean,
        complete=complete,
        error=error,
    )


def bench(
    address: str,
    template: RequestTemplate,
    *,
    count: int | None = None,
    duration_s: float | None = None,
    warmup: int = 1,
    timeout: float = DEFAULT_TIMEOUT_S,
) -> BenchReport:
    """Benchmark the server at ``address`` for ``count`` requests or ``duration_s``.

    A dropped connection ends the run early with ``complete=False`` and the
    requests completed so far.
    """

    if (count is None) == (duration_s is None):
        raise InputValidationError("give exactly one of count or duration_s")
    if count is not None and count < 1:
        raise InputValidationError("count must be at least 1")
    if duration_s is not None and duration_s <= 0:
        raise InputValidationError("duration_s must be positive")

    round_trips: list[float] = []
    server_latencies: list[int] = []
    error: str | None = None
    with PolicyClient.connect(address, timeout=timeout) as client:
        try:
            for _ in range(warmup):
                client.predict_full(template.obs, template.instruction)
        except TransportError as exc:
            return summarize([], [], 0.0, False, str(exc))

        started = time.perf_counter()
        while True:
            if count is not None and len(round_trips) >= count:
                break
            if duration_s is not None and time.perf_counter() - started >= duration_s:
                break
            sent = time.perf_counter()
            try:
                response = client.predict_full(template.obs, template.instruction)
            except TransportError as exc:
                error = str(exc)
                logger.warning("Benchmark stopped after %d requests: %s", len(round_trips), exc)
                break
            round_trips.append((time.perf_counter() - sent) * 1_000_000)
            server_latencies.append(response.latency_us)
        elapsed = time.perf_counter() - started

    report = summarize(round_trips, server_latencies, elapsed, error is None, error)
    logger.info(
        "bench %s: %.2f Hz over %d requests (p50 %.0f us, p99 %.0f us)",
        address,
        report.achieved_hz,
        report.count,
        report.p50_us,
        report.p99_us,
    )
    return report


__all__ = ["BenchReport", "RequestTemplate", "bench", "summarize"]
