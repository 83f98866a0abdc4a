"""Versioned single-file checkpoints.

Layout::

    M2TSCKPT\\n
    <manifest byte length, 16 ASCII digits>\\n
    <manifest: UTF-8 JSON, sorted keys>
    <blob: contiguous little-endian float32 tensors>

The manifest lists each tensor's name, shape, byte offset and size, plus the
resolved run config, vocabularies, epoch, best validation score, RNG state,
training history and a SHA-256 of the blob.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .corpus import Vocabs
from .errors import CheckpointError

MAGIC = b"M2TSCKPT\n"
FORMAT_VERSION = 1
_LE_F32 = np.dtype("<f4")


@dataclass
class Checkpoint:
    params: dict
    config: dict
    vocabs: Vocabs
    epoch: int = 0
    best_valid: Optional[float] = None
    rng_state: Optional[dict] = None
    history: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def manifest(self) -> tuple:
        tensors, chunks, offset = [], [], 0
        for name in sorted(self.params):
            arr = np.ascontiguousarray(self.params[name], dtype=_LE_F32)
            raw = arr.tobytes()
            tensors.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
            chunks.append(raw)
            offset += len(raw)
        blob = b"".join(chunks)
        manifest = {
            "format_version": FORMAT_VERSION,
            "tool_version": __version__,
            "tensors": tensors,
            "blob_size": len(blob),
            "blob_sha256": hashlib.sha256(blob).hexdigest(),
            "config": self.config,
            "vocabs": self.vocabs.to_dict(),
            "epoch": self.epoch,
            "best_valid": self.best_valid,
            "rng_state": self.rng_state,
            "history": self.history,
            "extra": self.extra,
        }
        return manifest, blob


def to_bytes(ckpt: Checkpoint) -> bytes:
    manifest, blob = ckpt.manifest()
    text = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + f"{len(text):016d}\n".encode("ascii") + text + blob


def save(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(ckpt))
    return path


def from_bytes(raw: bytes) -> Checkpoint:
    if not raw.startswith(MAGIC):
        raise CheckpointError("not an M2TS checkpoint (bad magic line)")
    head = len(MAGIC)
    try:
        size = int(raw[head:head + 16].decode("ascii"))
        if raw[head + 16:head + 17] != b"\n":
            raise ValueError
    except ValueError:
        raise CheckpointError("corrupt manifest header") from None
    start = head + 17
    try:
        manifest = json.loads(raw[start:start + size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError("corrupt manifest: cannot decode JSON (file truncated?)") from None
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})")
    blob = raw[start + size:]
    if len(blob) != manifest.get("blob_size"):
        raise CheckpointError(f"corrupt manifest: blob has {len(blob)} bytes, manifest declares "
                              f"{manifest.get('blob_size')} (file truncated?)")
    if hashlib.sha256(blob).hexdigest() != manifest.get("blob_sha256"):
        raise CheckpointError("corrupt checkpoint: blob checksum mismatch")
    params = {}
    for t in manifest["tensors"]:
        chunk = blob[t["offset"]:t["offset"] + t["nbytes"]]
        params[t["name"]] = np.frombuffer(chunk, dtype=_LE_F32).astype(np.float32).reshape(t["shape"])
    return Checkpoint(params=params, config=manifest["config"], vocabs=Vocabs.from_dict(manifest["vocabs"]),
                      epoch=manifest["epoch"], best_valid=manifest["best_valid"],
                      rng_state=manifest["rng_state"], history=manifest["history"],
                      extra=manifest.get("extra", {}))


def load(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return from_bytes(path.read_bytes())
