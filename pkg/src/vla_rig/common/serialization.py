"""Versioned JSON documents for persisted artifacts.

Every artifact the rig writes (codec, policy checkpoint, evaluation report,
run manifest) is a single JSON object carrying ``format`` and
``format_version`` keys. Readers name the versions they understand and fail
loudly on anything else.

Floats are written with ``json``'s shortest round-trip representation, so a
document read back yields bit-identical values.
"""

from __future__ import annotations

import json
from collections.abc import Collection, Mapping
from pathlib import Path
from typing import Any

from vla_rig.common.errors import FormatVersionError


def canonical_json(data: Any) -> str:
    """Compact, key-sorted JSON used for hashing and byte-stable output."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def build_document(kind: str, version: int, payload: Mapping[str, Any]) -> dict[str, Any]:
    if "format" in payload or "format_version" in payload:
        raise ValueError("payload must not carry its own format keys")
    return {"format": kind, "format_version": version, **payload}


def write_document(
    path: Path, kind: str, version: int, payload: Mapping[str, Any], *, indent: int | None = None
) -> Path:
    """Write ``payload`` as a versioned document and return the path."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(build_document(kind, version, payload), indent=indent, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def parse_document(
    data: Mapping[str, Any], kind: str, supported_versions: Collection[int]
) -> dict[str, Any]:
    """Check the format header of an already-decoded document.

    Returns the payload without the header keys.
    """

    found_kind = data.get("format")
    if found_kind != kind:
        raise FormatVersionError(
            f"Expected a {kind!r} document, found {found_kind!r}", found=found_kind
        )
    version = data.get("format_version")
    if version not in supported_versions:
        raise FormatVersionError(
            f"Unsupported {kind} format_version {version!r}; "
            f"supported: {sorted(supported_versions)}",
            found=version,
        )
    return {k: v for k, v in data.items() if k not in ("format", "format_version")}


def read_document(path: Path, kind: str, supported_versions: Collection[int]) -> dict[str, Any]:
    """Read and validate a versioned document from disk."""

    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatVersionError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatVersionError(f"{path} does not contain a JSON object")
    return parse_document(data, kind, supported_versions)


__all__ = [
    "build_document",
    "canonical_json",
    "parse_document",
    "read_document",
    "write_document",
]
