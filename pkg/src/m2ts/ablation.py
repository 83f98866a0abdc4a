"""Grid runs over the structural switches, reported as one metrics row per cell."""
from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field

from . import __version__
from .config import RunConfig, default_scale_weights
from .corpus import BatchBuilder
from .errors import ConfigError
from .inference import evaluate_model
from .trainer import data_limits, train

GRID_KEYS = ("scale_count", "weights", "residual", "fusion")


@dataclass
class AblationRow:
    cell: dict
    bleu4: float
    meteor: float
    rouge_l: float
    cider: float
    epochs: int
    best_valid: float

    @property
    def label(self) -> str:
        c = self.cell
        return (f"scales={c['scale_count']} weights={c['weights']} "
                f"residual={'on' if c['residual'] else 'off'} fusion={c['fusion']}")

    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.bleu4, self.meteor, self.rouge_l, self.cider))


@dataclass
class AblationReport:
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tool_version": __version__, "config": self.config,
                "rows": [dict(r.cell, bleu4=r.bleu4, meteor=r.meteor, rouge_l=r.rouge_l, cider=r.cider,
                              epochs=r.epochs, best_valid=r.best_valid) for r in self.rows]}

    def to_text(self) -> str:
        width = max([len(r.label) for r in self.rows] + [len("configuration")])
        lines = [f"{'configuration':<{width}}  BLEU-4  METEOR  ROUGE_L  CIDER"]
        for r in self.rows:
            lines.append(f"{r.label:<{width}}  {100 * r.bleu4:6.2f}  {100 * r.meteor:6.2f}  "
                         f"{100 * r.rouge_l:7.2f}  {r.cider:5.3f}")
        return "\n".join(lines) + "\n"


def expand_grid(scale_counts=(3,), weights=("paper",), residual=(True,), fusion=("acf",)) -> list:
    cells = []
    for s, w, r, f in itertools.product(scale_counts, weights, residual, fusion):
        if not 1 <= int(s) <= 5:
            raise ConfigError(f"scale_count {s} outside 1..5")
        if w not in ("paper", "uniform") or f not in ("acf", "attention"):
            raise ConfigError(f"unknown weights '{w}' or fusion '{f}'")
        cells.append({"scale_count": int(s), "weights": w, "residual": bool(r), "fusion": f})
    return cells


def cell_config(base: RunConfig, cell: dict) -> RunConfig:
    cfg = copy.deepcopy(base)
    cfg.model.scale_count = cell["scale_count"]
    cfg.model.scale_weights = default_scale_weights(cell["scale_count"], cell["weights"])
    cfg.model.residual = cell["residual"]
    cfg.model.fusion = cell["fusion"]
    return cfg.validate()


def ablation_matrix(base: RunConfig, cells, train_examples, valid_examples, test_examples, log=None):
    """Train and evaluate every cell with the base seed; returns an :class:`AblationReport`."""
    report = AblationReport(config=base.to_dict())
    for cell in cells:
        cfg = cell_config(base, cell)
        result = train(train_examples, valid_examples, cfg)
        builder = BatchBuilder(result.checkpoint.vocabs, cfg.model.scale_count, data_limits(cfg))
        metrics, _ = evaluate_model(result.model, builder, result.checkpoint.vocabs, test_examples, cfg.decode)
        row = AblationRow(cell, metrics.bleu4, metrics.meteor, metrics.rouge_l, metrics.cider,
                          len(result.history), result.checkpoint.best_valid)
        report.rows.append(row)
        if log is not None:
            log(row)
    return report
