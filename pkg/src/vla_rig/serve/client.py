"""Blocking client for the policy server and its simlab endpoint adapter."""

from __future__ import annotations

import itertools
import logging
import socket
import time
from collections.abc import Sequence
from typing import Any

import numpy as np
from tenacity import (
    RetryError,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_fixed,
)

from vla_rig.common.config import parse_address
from vla_rig.serve.protocol import (
    PredictRequest,
    PredictResponse,
    ProtocolError,
    TransportError,
    read_frame,
    write_frame,
)
from vla_rig.simlab.rollout import EndpointTimeout
from vla_rig.simlab.world import WorldState

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 10.0
DEFAULT_CONNECT_ATTEMPTS = 5
DEFAULT_CONNECT_WAIT_S = 0.2


class RemoteError(TransportError):
    """The server answered with an error frame."""


class PolicyClient:
    """One connection, one request in flight at a time.

    Request ids start at 1 and increase by one per request. Responses whose
    id does not match the pending request are discarded.
    """

    def __init__(self, sock: socket.socket, address: str, timeout: float) -> None:
        self._sock = sock
        self.address = address
        self.timeout = timeout
        self._ids = itertools.count(1)

    @classmethod
    def connect(
        cls,
        address: str,
        timeout: float = DEFAULT_TIMEOUT_S,
        attempts: int = DEFAULT_CONNECT_ATTEMPTS,
        wait_s: float = DEFAULT_CONNECT_WAIT_S,
    ) -> PolicyClient:
        """Open a connection, retrying refused connections with a fixed wait."""

        host, port = parse_address(address)
        retrying = Retrying(
            retry=retry_if_exception_type(ConnectionRefusedError),
            stop=stop_after_attempt(attempts),
            wait=wait_fixed(wait_s),
            reraise=False,
        )
        try:
            for attempt in retrying:
                with attempt:
                    sock = socket.create_connection((host, port), timeout=timeout)
        except RetryError as exc:
            raise TransportError(
                f"Cannot connect to {address} after {attempts} attempts"
            ) from exc.last_attempt.exception()
        except OSError as exc:
            raise TransportError(f"Cannot connect to {address}: {exc}") from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(timeout)
        logger.debug("Connected to %s", address)
        return cls(sock, address, timeout)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> PolicyClient:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def _exchange(self, message: dict[str, Any], expected: str) -> dict[str, Any]:
        try:
            write_frame(self._sock, message)
            while True:
                reply = read_frame(self._sock)
                if reply is None:
                    raise TransportError(f"{self.address} closed the connection")
                if reply["type"] == "error" and reply.get("id") in (None, message.get("id")):
                    raise RemoteError(f"{self.address}: {reply.get('message')}")
                if reply["type"] != expected:
                    continue
                if "id" in message and reply.get("id") != message["id"]:
                    logger.debug("Skipping stale response id %s", reply.get("id"))
                    continue
                return reply
        except TimeoutError as exc:
            raise TransportError(
                f"no response from {self.address} within {self.timeout}s"
            ) from exc
        except ProtocolError as exc:
            raise TransportError(f"malformed response from {self.address}: {exc}") from exc
        except OSError as exc:
            raise TransportError(f"connection to {self.address} failed: {exc}") from exc

    def predict_full(self, obs: Sequence[float], instruction: str) -> PredictResponse:
        request = PredictRequest(
            id=next(self._ids), obs=[float(v) for v in obs], instruction=instruction
        )
        reply = self._exchange(request.model_dump(), "action")
        return PredictResponse.model_validate(reply)

    def predict(self, obs: Sequence[float], instruction: str) -> np.ndarray:
        """One round trip; returns the action vector."""
        return np.asarray(self.predict_full(obs, instruction).action, dtype=np.float64)

    def info(self) -> dict[str, Any]:
        return self._exchange({"type": "info"}, "info")

    def reset(self) -> None:
        self._exchange({"type": "reset"}, "reset")


def client_predict(client: PolicyClient, obs: Sequence[float], instruction: str) -> np.ndarray:
    return client.predict(obs, instruction)


class RemoteEndpoint:
    """Simlab endpoint backed by a running server.

    The reported latency is the measured round trip, so non-blocking
    rollouts hold each action for as long as the remote call took.
    """

    def __init__(self, client: PolicyClient, name: str = "remote") -> None:
        self.client = client
        self.name = name

    def act(
        self, state: WorldState, obs: np.ndarray, instruction: str
    ) -> tuple[np.ndarray, np.ndarray | None, float]:
        started = time.perf_counter()
        try:
            response = self.client.predict_full(obs.tolist(), instruction)
        except TransportError as exc:
            if isinstance(exc.__cause__, TimeoutError):
                raise EndpointTimeout(str(exc)) from exc
            raise
        elapsed = time.perf_counter() - started
        return (
            np.asarray(response.action, dtype=np.float64),
            np.asarray(response.tokens, dtype=np.int64),
            elapsed,
        )


__all__ = [
    "DEFAULT_TIMEOUT_S",
    "PolicyClient",
    "RemoteEndpoint",
    "RemoteError",
    "client_predict",
]
