"""Preprocessed corpus cache: gzip-compressed JSON, deterministic bytes.

A cache holds every kept example of each split (tokens plus AST), the
ingestion report, the limits used, and the tool version. Training and
evaluation accept either a cache or raw JSON-lines files.
"""
from __future__ import annotations

import gzip
import json
from pathlib import Path

from . import __version__
from .astgraph import AstGraph
from .corpus import DataLimits, Example, load_dataset
from .errors import ConfigError, DataFormatError

CACHE_FORMAT = "m2ts-corpus"
CACHE_VERSION = 1
_GZIP_MAGIC = b"\x1f\x8b"


def example_to_dict(ex: Example) -> dict:
    return {"id": ex.source_id, "code_tokens": ex.code_tokens, "summary_tokens": ex.summary_tokens,
            "ast": ex.ast.to_record()}


def example_from_dict(d: dict) -> Example:
    return Example(list(d["code_tokens"]), AstGraph.from_record(d["ast"]), list(d["summary_tokens"]),
                   str(d.get("id", "")))


def write_cache(path, splits: dict, report, limits: DataLimits, config: dict = None) -> Path:
    payload = {
        "format": CACHE_FORMAT,
        "format_version": CACHE_VERSION,
        "tool_version": __version__,
        "limits": vars(limits),
        "config": config,
        "report": report.to_dict(),
        "splits": {name: [example_to_dict(ex) for ex in exs] for name, exs in splits.items()},
    }
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh, gzip.GzipFile(filename="", mode="wb", fileobj=fh, mtime=0) as gz:
        gz.write(raw)
    return path


def is_cache(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) == _GZIP_MAGIC


def read_cache(path) -> dict:
    """Return ``{split: [Example]}`` from a cache file."""
    try:
        with gzip.open(path, "rb") as gz:
            payload = json.loads(gz.read().decode("utf-8"))
    except (OSError, EOFError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"{path}: unreadable corpus cache ({exc})") from None
    if payload.get("format") != CACHE_FORMAT or payload.get("format_version") != CACHE_VERSION:
        raise DataFormatError(f"{path}: not a version-{CACHE_VERSION} corpus cache")
    return {name: [example_from_dict(d) for d in exs] for name, exs in payload["splits"].items()}


def load_split(path, limits: DataLimits, split: str) -> list:
    """Examples of ``split`` from a cache, or all kept records of a JSON-lines file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"data file not found: {path}")
    if is_cache(path):
        splits = read_cache(path)
        if split not in splits:
            raise DataFormatError(f"{path}: cache has no '{split}' split (has {sorted(splits)})")
        return splits[split]
    examples, _ = load_dataset(path, limits, split)
    return examples


def resolve_data_path(value) -> Path:
    """``"toy"`` names the bundled corpus; anything else is a filesystem path."""
    if str(value) == "toy":
        from .data.toy import toy_corpus_path
        return Path(str(toy_corpus_path()))
    return Path(value)


def load_splits(data, limits: DataLimits, names=("train", "valid", "test")) -> dict:
    """Load the named splits of a ``DataConfig``.

    Test examples duplicating a training example are dropped, unless test and
    train read the same file (a deliberate reuse, as in overfit runs).
    """
    paths = {}
    for name in names:
        value = getattr(data, name)
        if not value:
            raise ConfigError(f"data.{name} is not set; pass it in the config or with --set data.{name}=PATH")
        paths[name] = resolve_data_path(value)
    out = {name: load_split(path, limits, name) for name, path in paths.items()}
    if "test" in out and "train" in out and paths["test"].resolve() != paths["train"].resolve():
        seen = {ex.key for ex in out["train"]}
        out["test"] = [ex for ex in out["test"] if ex.key not in seen]
    return out
