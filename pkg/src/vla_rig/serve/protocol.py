"""Wire protocol of the policy server.

A frame is a 4-byte unsigned big-endian length followed by exactly that many
bytes of UTF-8 JSON. Payloads are compact JSON objects (no whitespace) with
a ``type`` field. Frames larger than ``MAX_FRAME_BYTES`` are rejected.

Message types:

====================  ==========================================================
``predict``           ``{"type","id","obs","instruction"}``
``action``            ``{"type","id","action","tokens","latency_us"}``
``info``              request ``{"type"}``; the reply adds
                      ``"n_dims","decode_mode","profile"``
``reset``             ``{"type"}``, echoed back as the acknowledgement
``error``             ``{"type","id","message"}``; ``id`` may be null
====================  ==========================================================
"""

from __future__ import annotations

import json
import socket
import struct
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from vla_rig.common.errors import RigError

LENGTH_PREFIX = struct.Struct("!I")
MAX_FRAME_BYTES = 16 * 1024 * 1024


class ProtocolError(RigError):
    """Raised for frames that violate the wire format."""


class TransportError(RigError):
    """Raised when the connection fails, closes or times out."""


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["predict"] = "predict"
    id: int = Field(ge=0)
    obs: list[float]
    instruction: str


class PredictResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["action"] = "action"
    id: int
    action: list[float]
    tokens: list[int]
    latency_us: int = Field(ge=0)


class InfoReply(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["info"] = "info"
    n_dims: int
    decode_mode: str
    profile: str


class ErrorReply(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["error"] = "error"
    id: int | None = None
    message: str


def encode_payload(message: dict[str, Any]) -> bytes:
    return json.dumps(message, separators=(",", ":"), allow_nan=False).encode("utf-8")


def encode_frame(message: dict[str, Any] | BaseModel) -> bytes:
    """Length-prefixed frame for ``message``."""

    if isinstance(message, BaseModel):
        message = message.model_dump(mode="json")
    payload = encode_payload(message)
    if len(payload) > MAX_FRAME_BYTES:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds {MAX_FRAME_BYTES}")
    return LENGTH_PREFIX.pack(len(payload)) + payload


def decode_payload(payload: bytes) -> dict[str, Any]:
    try:
        message = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"payload is not UTF-8 JSON: {exc}") from exc
    if not isinstance(message, dict) or not isinstance(message.get("type"), str):
        raise ProtocolError("payload must be a JSON object with a string 'type'")
    return message


def decode_frame(frame: bytes) -> dict[str, Any]:
    """Inverse of ``encode_frame`` for one complete frame."""

    if len(frame) < LENGTH_PREFIX.size:
        raise ProtocolError("frame shorter than its length prefix")
    (length,) = LENGTH_PREFIX.unpack_from(frame)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"declared length {length} exceeds {MAX_FRAME_BYTES}")
    payload = frame[LENGTH_PREFIX.size :]
    if len(payload) != length:
        raise ProtocolError(f"declared length {length}, payload has {len(payload)} bytes")
    return decode_payload(payload)


def _recv_exactly(sock: socket.socket, n: int) -> bytes | None:
    chunks = bytearray()
    while len(chunks) < n:
        chunk = sock.recv(n - len(chunks))
        if not chunk:
            return None
        chunks.extend(chunk)
    return bytes(chunks)


def read_frame(sock: socket.socket) -> dict[str, Any] | None:
    """Read one message; ``None`` on a clean close before a new frame.

    Raises ``ProtocolError`` for oversize or malformed frames and
    ``TransportError`` when the peer disconnects mid-frame.
    """

    header = _recv_exactly(sock, LENGTH_PREFIX.size)
    if header is None:
        return None
    (length,) = LENGTH_PREFIX.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"declared length {length} exceeds {MAX_FRAME_BYTES}")
    payload = _recv_exactly(sock, length)
    if payload is None:
        raise TransportError("connection closed in the middle of a frame")
    return decode_payload(payload)


def write_frame(sock: socket.socket, message: dict[str, Any] | BaseModel) -> None:
    sock.sendall(encode_frame(message))


def parse_predict(message: dict[str, Any]) -> PredictRequest:
    try:
        return PredictRequest.model_validate(message)
    except ValidationError as exc:
        raise ProtocolError(f"invalid predict request: {exc}") from exc


__all__ = [
    "LENGTH_PREFIX",
    "MAX_FRAME_BYTES",
    "ErrorReply",
    "InfoReply",
    "PredictRequest",
    "PredictResponse",
    "ProtocolError",
    "TransportError",
    "decode_frame",
    "decode_payload",
    "encode_frame",
    "encode_payload",
    "parse_predict",
    "read_frame",
    "write_frame",
]
