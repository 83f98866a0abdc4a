"""Configuration tree with full-size defaults and a desk-scale preset.

Configs serialize to a single JSON document; ``load_run_config`` merges a file
on top of the defaults and then applies ``section.key=value`` overrides.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError

TUNED_WEIGHTS = {1: [1.0], 3: [0.1, 0.2, 0.7]}


def default_scale_weights(scale_count: int, scheme: str = "paper") -> list:
    if scheme == "paper" and scale_count in TUNED_WEIGHTS:
        return list(TUNED_WEIGHTS[scale_count])
    if scheme not in ("paper", "uniform"):
        raise ConfigError(f"unknown scale weight scheme '{scheme}'")
    return [1.0 / scale_count] * scale_count


@dataclass
class ModelConfig:
    d_model: int = 512
    layers: int = 6
    heads: int = 8
    d_ff: int = 2048
    d_k: Optional[int] = 64
    dropout: float = 0.2
    scale_count: int = 3
    scale_weights: Optional[list] = field(default_factory=lambda: [0.1, 0.2, 0.7])
    residual: bool = True
    share_scale_weights: bool = False
    trainable_scale_weights: bool = False
    init_mode: str = "learned"
    fusion: str = "acf"
    fusion_d_k: int = 64
    ln_eps: float = 1e-5

    @property
    def head_dim(self) -> int:
        return self.d_k if self.d_k is not None else self.d_model // self.heads

    def resolved_weights(self) -> list:
        if self.scale_weights is None:
            return default_scale_weights(self.scale_count)
        return list(self.scale_weights)

    def validate(self):
        for name in ("d_model", "heads", "d_ff", "fusion_d_k"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"model.{name} must be positive")
        if self.layers < 0:
            raise ConfigError("model.layers must be >= 0")
        if self.head_dim * self.heads != self.d_model:
            raise ConfigError(f"heads*d_k must equal d_model ({self.heads}*{self.head_dim} != {self.d_model})")
        if self.d_model % 2:
            raise ConfigError("d_model must be even for sinusoidal position encoding")
        if not 1 <= self.scale_count <= 5:
            raise ConfigError(f"model.scale_count must be in [1, 5], got {self.scale_count}")
        w = self.resolved_weights()
        if len(w) != self.scale_count:
            raise ConfigError(f"{len(w)} scale weights given for {self.scale_count} scales")
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError(f"scale weights must be non-negative and sum to 1, got {w}")
        if self.init_mode not in ("learned", "hashed"):
            raise ConfigError(f"unknown init_mode '{self.init_mode}'")
        if self.fusion not in ("acf", "attention"):
            raise ConfigError(f"unknown fusion '{self.fusion}'")
        if not 0 <= self.dropout < 1:
            raise ConfigError("model.dropout must be in [0, 1)")
        return self


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    seed: int = 0
    eval_metric: str = "loss"
    precision: int = 32
    momentum: float = 0.0
    clip_norm: Optional[float] = None

    def validate(self):
        if self.lr <= 0 or self.batch_size <= 0 or self.max_epochs <= 0 or self.patience < 0:
            raise ConfigError("train.lr, batch_size and max_epochs must be positive; patience >= 0")
        if self.patience > self.max_epochs:
            raise ConfigError("train.patience must not exceed train.max_epochs")
        if self.precision not in (32, 64):
            raise ConfigError("train.precision must be 32 or 64")
        if self.eval_metric not in ("loss", "bleu"):
            raise ConfigError("train.eval_metric must be 'loss' or 'bleu'")
        return self


@dataclass
class DataConfig:
    train: Optional[str] = None
    valid: Optional[str] = None
    test: Optional[str] = None
    max_code_len: int = 200
    max_summary_len: int = 30
    vocab_size: int = 50000
    max_ast_nodes: Optional[int] = None


@dataclass
class DecodeConfig:
    beam_size: int = 5
    max_len: int = 30
    len_norm: float = 0.7


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)

    def validate(self):
        self.model.validate()
        self.train.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        cfg = cls()
        for section, values in (d or {}).items():
            if not hasattr(cfg, section):
                raise ConfigError(f"unknown config section '{section}'")
            target = getattr(cfg, section)
            for key, value in values.items():
                if not hasattr(target, key):
                    raise ConfigError(f"unknown config key '{section}.{key}'")
                setattr(target, key, value)
        return cfg


def desk_scale(cfg: RunConfig) -> RunConfig:
    """Shrink the model to d_model 64, 2 layers, 2 heads, d_ff 128."""
    cfg.model.d_model, cfg.model.layers, cfg.model.heads, cfg.model.d_ff = 64, 2, 2, 128
    cfg.model.d_k = None
    return cfg


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override '{item}' must look like section.key=value")
        path, value = item.split("=", 1)
        section, key = path.split(".", 1)
        RunConfig.from_dict({section: {key: None}})  # validates the path
        setattr(getattr(cfg, section), key, _coerce(value))
    return cfg


def load_run_config(path=None, overrides=(), desk=False) -> RunConfig:
    data = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON config ({exc.msg})") from None
        base = Path(p).parent
        for key in ("train", "valid", "test"):
            rel = data.get("data", {}).get(key)
            if rel and not Path(rel).is_absolute():
                data["data"][key] = str((base / rel).resolve())
    cfg = RunConfig.from_dict(data)
    if desk:
        desk_scale(cfg)
    apply_overrides(cfg, overrides)
    env_seed = os.environ.get("M2TS_SEED")
    if env_seed is not None:
        try:
            cfg.train.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"M2TS_SEED must be an integer, got {env_seed!r}") from None
    return cfg.validate()
