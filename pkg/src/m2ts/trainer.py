"""SGD training with validation-based early stopping and checkpoints."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .checkpoint import Checkpoint
from .config import RunConfig
from .corpus import BatchBuilder, DataLimits, Vocabs
from .errors import NumericInstabilityError, TrainingDiverged
from .inference import evaluate_model, mean_loss
from .model import M2TSModel
from .numerics import SGD, Rng

log = logging.getLogger(__name__)


def data_limits(cfg: RunConfig) -> DataLimits:
    return DataLimits(max_code_len=cfg.data.max_code_len, max_summary_len=cfg.data.max_summary_len,
                      max_ast_nodes=cfg.data.max_ast_nodes)


def build_model(cfg: RunConfig, vocabs: Vocabs) -> M2TSModel:
    return M2TSModel(cfg.model, len(vocabs.code), len(vocabs.nl), len(vocabs.node), seed=cfg.train.seed)


def model_from_checkpoint(ckpt: Checkpoint):
    """Rebuild ``(model, vocabs, config)``; inference never consults the seed stream."""
    cfg = RunConfig.from_dict(ckpt.config).validate()
    model = build_model(cfg, ckpt.vocabs)
    model.load_state_dict(ckpt.params)
    return model.eval(), ckpt.vocabs, cfg


@dataclass
class TrainResult:
    model: M2TSModel
    checkpoint: Checkpoint
    history: list = field(default_factory=list)
    stop_reason: str = ""


def _snapshot(model):
    return {name: np.array(p.data, copy=True) for name, p in model.named_parameters()}


def train(train_examples, valid_examples, cfg: RunConfig, vocabs: Vocabs = None, on_epoch=None) -> TrainResult:
    """Fit a fresh model; the returned model carries the best-validation weights.

    Each epoch visits every training example once in a seed-determined order.
    Validation runs with dropout off. Training stops once ``patience``
    consecutive epochs fail to improve the validation score, or at
    ``max_epochs``.
    """
    if not train_examples or not valid_examples:
        raise ValueError("training needs non-empty train and valid splits")
    cfg.validate()
    tc = cfg.train
    with nx.precision(tc.precision):
        vocabs = vocabs or Vocabs.build(train_examples, cfg.data.vocab_size)
        model = build_model(cfg, vocabs)
        builder = BatchBuilder(vocabs, cfg.model.scale_count, data_limits(cfg))
        root = Rng(tc.seed).split("train")
        dropout_rng = root.split("dropout")
        model.set_dropout_rng(dropout_rng)
        opt = SGD(model.parameters(), lr=tc.lr, momentum=tc.momentum, clip_norm=tc.clip_norm)

        history, best_state, best_score, best_epoch = [], _snapshot(model), None, 0
        bad_epochs, stop_reason = 0, "max_epochs"

        def make_checkpoint(state, epoch, score):
            return Checkpoint(params=state, config=cfg.to_dict(), vocabs=vocabs, epoch=epoch,
                              best_valid=score, rng_state=dropout_rng.get_state(), history=list(history))

        for epoch in range(1, tc.max_epochs + 1):
            started = time.perf_counter()
            model.train()
            order = root.split("shuffle").split(epoch).permutation(len(train_examples))
            seen, weighted = 0, 0.0
            for batch in builder.batches(train_examples, tc.batch_size, order):
                loss = model.loss(batch)
                value = float(loss.data)
                if not math.isfinite(value):
                    raise TrainingDiverged(f"non-finite training loss at epoch {epoch}",
                                           make_checkpoint(best_state, best_epoch, best_score), history)
                loss.backward()
                try:
                    opt.step()
                except NumericInstabilityError as exc:
                    raise TrainingDiverged(f"epoch {epoch}: {exc}",
                                           make_checkpoint(best_state, best_epoch, best_score), history) from None
                seen += batch.size
                weighted += value * batch.size
            train_loss = weighted / seen

            valid_loss = mean_loss(model, builder, valid_examples, tc.batch_size)
            record = {"epoch": epoch, "train_loss": train_loss, "valid_loss": valid_loss}
            if tc.eval_metric == "bleu":
                report, _ = evaluate_model(model, builder, vocabs, valid_examples, cfg.decode, greedy=True)
                record["valid_bleu"] = report.bleu4
                score = -report.bleu4
            else:
                score = valid_loss
            history.append(record)
            log.info("epoch %d train %.4f valid %.4f (%.1fs)", epoch, train_loss, valid_loss,
                     time.perf_counter() - started)
            if on_epoch is not None:
                on_epoch(record)

            if best_score is None or score < best_score:
                best_score, best_epoch, bad_epochs = score, epoch, 0
                best_state = _snapshot(model)
            else:
                bad_epochs += 1
                if bad_epochs >= tc.patience:
                    stop_reason = "early_stop"
                    break

        model.load_state_dict(best_state)
        model.eval()
        best_valid = best_score if tc.eval_metric == "loss" else -best_score
        ckpt = make_checkpoint(best_state, best_epoch, best_valid)
        ckpt.extra = {"stop_reason": stop_reason, "epochs_run": len(history)}
        return TrainResult(model, ckpt, history, stop_reason)
