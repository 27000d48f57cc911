"""Threaded TCP policy server.

Each connection gets its own thread; the policy is shared read-only. A
request is handled as: injected delay, prediction, response. ``latency_us``
in the response covers both and is measured on the server.

Malformed frames (bad length, bad JSON) are answered with an error frame and
the connection is closed. Well-framed requests the server cannot serve (bad
observation, unknown type) get an error frame and the connection stays
open. Other connections are unaffected in both cases.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
import time
from collections.abc import Callable, Sequence
from functools import partial
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vla_rig.common.config import parse_address
from vla_rig.common.errors import ConfigurationError, RigError
from vla_rig.common.json_log import JsonlLog
from vla_rig.models.action_codec import ActionCodec
from vla_rig.models.token_policy import TokenPolicy, predict
from vla_rig.serve.protocol import (
    ErrorReply,
    InfoReply,
    PredictResponse,
    ProtocolError,
    TransportError,
    parse_predict,
    read_frame,
    write_frame,
)

logger = logging.getLogger(__name__)

Predictor = Callable[[Sequence[float], str], tuple[np.ndarray, np.ndarray]]


class ServerStartupError(RigError):
    """Raised when the server cannot bind its address."""


class LatencyProfile(BaseModel):
    """Per-request delay standing in for slower inference hardware or precision."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str = "none"
    injected_delay_us: int = Field(default=0, ge=0)

    @property
    def delay_s(self) -> float:
        return self.injected_delay_us / 1_000_000


LATENCY_PRESETS: dict[str, LatencyProfile] = {
    "none": LatencyProfile(label="none", injected_delay_us=0),
    "bf16-sim": LatencyProfile(label="bf16-sim", injected_delay_us=167_000),
    "int4-sim": LatencyProfile(label="int4-sim", injected_delay_us=333_000),
    "int8-sim": LatencyProfile(label="int8-sim", injected_delay_us=833_000),
}


def resolve_profile(name: str, presets: dict[str, LatencyProfile] | None = None) -> LatencyProfile:
    presets = presets or LATENCY_PRESETS
    try:
        return presets[name]
    except KeyError as exc:
        raise ConfigurationError(
            f"Unknown latency profile {name!r}; available: {sorted(presets)}"
        ) from exc


class _PolicyRequestHandler(socketserver.BaseRequestHandler):
    server: _RigTCPServer

    def setup(self) -> None:
        self.server.track(self.request)

    def finish(self) -> None:
        self.server.untrack(self.request)

    def handle(self) -> None:
        sock: socket.socket = self.request
        while True:
            try:
                message = read_frame(sock)
            except ProtocolError as exc:
                logger.warning("Closing connection after malformed frame: %s", exc)
                self._reply(ErrorReply(message=str(exc)))
                return
            except (TransportError, OSError):
                return
            if message is None:
                return
            if not self._reply(self.server.dispatch(message)):
                return

    def _reply(self, reply: BaseModel | dict[str, Any]) -> bool:
        try:
            write_frame(self.request, reply)
        except OSError:
            return False
        return True


class _RigTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        predictor: Predictor,
        n_dims: int,
        decode_mode: str,
        profile: LatencyProfile,
        latency_log: JsonlLog | None,
    ) -> None:
        self.predictor = predictor
        self.n_dims = n_dims
        self.decode_mode = decode_mode
        self.profile = profile
        self.latency_log = latency_log
        self.requests_served = 0
        self._connections: set[socket.socket] = set()
        self._lock = threading.Lock()
        super().__init__(address, _PolicyRequestHandler)

    def track(self, sock: socket.socket) -> None:
        with self._lock:
            self._connections.add(sock)

    def untrack(self, sock: socket.socket) -> None:
        with self._lock:
            self._connections.discard(sock)

    def close_connections(self) -> None:
        with self._lock:
            connections = list(self._connections)
        for sock in connections:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass

    def dispatch(self, message: dict[str, Any]) -> BaseModel | dict[str, Any]:
        kind = message["type"]
        if kind == "predict":
            return self._predict(message)
        if kind == "info":
            return InfoReply(
                n_dims=self.n_dims, decode_mode=self.decode_mode, profile=self.profile.label
            )
        if kind == "reset":
            return {"type": "reset"}
        return ErrorReply(id=_request_id(message), message=f"unknown message type {kind!r}")

    def _predict(self, message: dict[str, Any]) -> BaseModel:
        try:
            request = parse_predict(message)
        except ProtocolError as exc:
            return ErrorReply(id=_request_id(message), message=str(exc))

        started = time.perf_counter()
        if self.profile.injected_delay_us:
            time.sleep(self.profile.delay_s)
        try:
            action, tokens = self.predictor(request.obs, request.instruction)
        except (RigError, ValueError) as exc:
            return ErrorReply(id=request.id, message=str(exc))
        latency_us = int((time.perf_counter() - started) * 1_000_000)

        with self._lock:
            self.requests_served += 1
        if self.latency_log is not None:
            self.latency_log.append({"id": request.id, "latency_us": latency_us})
        return PredictResponse(
            id=request.id,
            action=[float(v) for v in action],
            tokens=[int(t) for t in tokens],
            latency_us=latency_us,
        )


def _request_id(message: dict[str, Any]) -> int | None:
    value = message.get("id")
    return value if isinstance(value, int) and not isinstance(value, bool) else None


class ServerHandle:
    """A running server; use as a context manager or call ``close``."""

    def __init__(self, server: _RigTCPServer) -> None:
        self._server = server
        self._thread = threading.Thread(
            target=server.serve_forever, name="vla-rig-server", daemon=True
        )
        self._closed = False

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    @property
    def requests_served(self) -> int:
        return self._server.requests_served

    def start(self) -> ServerHandle:
        self._thread.start()
        logger.info(
            "Serving on %s (profile %s, %d us delay)",
            self.address,
            self._server.profile.label,
            self._server.profile.injected_delay_us,
        )
        return self

    def wait(self) -> None:
        self._thread.join()

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._thread.is_alive():
            self._server.shutdown()
        self._server.close_connections()
        self._server.server_close()
        logger.info("Server on %s stopped", self.address)

    def __enter__(self) -> ServerHandle:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def start_server(
    predictor: Predictor,
    address: str,
    *,
    n_dims: int,
    decode_mode: str = "greedy",
    profile: LatencyProfile | None = None,
    latency_log: JsonlLog | None = None,
) -> ServerHandle:
    """Bind ``address`` (port 0 picks a free port) and start serving."""

    host, port = parse_address(address)
    try:
        server = _RigTCPServer(
            (host, port), predictor, n_dims, decode_mode, profile or LatencyProfile(), latency_log
        )
    except OSError as exc:
        raise ServerStartupError(f"Cannot bind {address}: {exc}") from exc
    return ServerHandle(server).start()


def serve(
    policy: TokenPolicy,
    codec: ActionCodec,
    address: str,
    profile: LatencyProfile | None = None,
    *,
    latency_log: JsonlLog | None = None,
) -> ServerHandle:
    """Serve ``policy`` decoded through ``codec``."""

    predictor: Predictor = partial(_predict_with, policy, codec)
    return start_server(
        predictor,
        address,
        n_dims=policy.spec.n_dims,
        decode_mode=policy.decode_mode,
        profile=profile,
        latency_log=latency_log,
    )


def _predict_with(
    policy: TokenPolicy, codec: ActionCodec, obs: Sequence[float], instruction: str
) -> tuple[np.ndarray, np.ndarray]:
    return predict(policy, obs, instruction, codec)


__all__ = [
    "LATENCY_PRESETS",
    "LatencyProfile",
    "Predictor",
    "ServerHandle",
    "ServerStartupError",
    "resolve_profile",
    "serve",
    "start_server",
]
