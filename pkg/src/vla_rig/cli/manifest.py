"""Run manifests written next to every artifact a command produces.

A manifest records what produced the artifact: the command, the merged run
configuration and its hash, the seeds, and the SHA-256 of every input file.
Re-running the command with the same inputs, config and seeds reproduces the
artifact byte for byte.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from vla_rig import __version__
from vla_rig.cli.run_config import RigConfig
from vla_rig.common.serialization import read_document, write_document
from vla_rig.common.yaml_config import config_hash

MANIFEST_FORMAT = "vla-run-manifest"
MANIFEST_FORMAT_VERSION = 1
MANIFEST_SUFFIX = ".manifest.json"

_CHUNK = 1 << 20


class InputFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    sha256: str


class RunManifest(BaseModel):
    """Provenance of one command invocation."""

    model_config = ConfigDict(frozen=True)

    command: str
    config_hash: str
    config: dict[str, Any]
    seeds: dict[str, int] = Field(default_factory=dict)
    inputs: list[InputFile] = Field(default_factory=list)
    artifacts: list[str] = Field(default_factory=list)
    tool_version: str = __version__


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(_CHUNK), b""):
            digest.update(chunk)
    return digest.hexdigest()


def manifest_path(artifact: Path) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + MANIFEST_SUFFIX)


def build_manifest(
    command: str,
    config: RigConfig,
    *,
    seeds: Mapping[str, int] | None = None,
    inputs: Sequence[Path] = (),
    artifacts: Sequence[Path] = (),
) -> RunManifest:
    return RunManifest(
        command=command,
        config_hash=config_hash(config),
        config=config.model_dump(mode="json"),
        seeds=dict(seeds or {}),
        inputs=[InputFile(path=str(p), sha256=file_sha256(p)) for p in inputs],
        artifacts=[str(p) for p in artifacts],
    )


def write_manifest(
    artifact: Path,
    command: str,
    config: RigConfig,
    *,
    seeds: Mapping[str, int] | None = None,
    inputs: Sequence[Path] = (),
    extra_artifacts: Sequence[Path] = (),
) -> Path:
    """Write ``<artifact>.manifest.json`` and return its path."""

    manifest = build_manifest(
        command,
        config,
        seeds=seeds,
        inputs=inputs,
        artifacts=[Path(artifact), *extra_artifacts],
    )
    return write_document(
        manifest_path(artifact),
        MANIFEST_FORMAT,
        MANIFEST_FORMAT_VERSION,
        manifest.model_dump(mode="json"),
        indent=2,
    )


def read_manifest(path: Path) -> RunManifest:
    return RunManifest.model_validate(
        read_document(path, MANIFEST_FORMAT, {MANIFEST_FORMAT_VERSION})
    )


__all__ = [
    "MANIFEST_FORMAT",
    "MANIFEST_FORMAT_VERSION",
    "MANIFEST_SUFFIX",
    "InputFile",
    "RunManifest",
    "build_manifest",
    "file_sha256",
    "manifest_path",
    "read_manifest",
    "write_manifest",
]
