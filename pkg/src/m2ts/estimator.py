"""scikit-learn style wrappers around the summarizer and the AST scale builder."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import checkpoint as ckpt_io
from .astgraph import AstGraph, adjacency, build_scales, power
from .config import DataConfig, DecodeConfig, ModelConfig, RunConfig, TrainConfig
from .corpus import BatchBuilder
from .errors import ConfigError, DataFormatError
from .inference import evaluate_model, summarize
from .metrics import bleu
from .trainer import data_limits, model_from_checkpoint, train
from .validation import check_program, check_programs, check_summaries, to_examples


class M2TSSummarizer(BaseEstimator):
    """Code summarizer over (code, AST) programs.

    Defaults are the full-size hyperparameters; pass ``d_model=64, layers=2,
    heads=2, d_ff=128`` for a model that trains in minutes on a CPU.
    ``X`` items are mini-language sources, dataset records or ``(code, ast)``
    pairs; ``y`` items are summary strings or token lists.
    """

    def __init__(self, d_model=512, layers=6, heads=8, d_ff=2048, d_k=None, dropout=0.2, scale_count=3,
                 scale_weights=None, residual=True, fusion="acf", init_mode="learned", lr=1e-4,
                 batch_size=32, max_epochs=200, patience=20, eval_metric="loss", precision=32, seed=0,
                 beam_size=5, max_summary_len=30, max_code_len=200, vocab_size=50000):
        self.d_model = d_model
        self.layers = layers
        self.heads = heads
        self.d_ff = d_ff
        self.d_k = d_k
        self.dropout = dropout
        self.scale_count = scale_count
        self.scale_weights = scale_weights
        self.residual = residual
        self.fusion = fusion
        self.init_mode = init_mode
        self.lr = lr
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.eval_metric = eval_metric
        self.precision = precision
        self.seed = seed
        self.beam_size = beam_size
        self.max_summary_len = max_summary_len
        self.max_code_len = max_code_len
        self.vocab_size = vocab_size

    def to_run_config(self) -> RunConfig:
        model = ModelConfig(d_model=self.d_model, layers=self.layers, heads=self.heads, d_ff=self.d_ff,
                            d_k=self.d_k, dropout=self.dropout, scale_count=self.scale_count,
                            scale_weights=None if self.scale_weights is None else list(self.scale_weights),
                            residual=self.residual, fusion=self.fusion, init_mode=self.init_mode)
        train_cfg = TrainConfig(lr=self.lr, batch_size=self.batch_size, max_epochs=self.max_epochs,
                                patience=min(self.patience, self.max_epochs), eval_metric=self.eval_metric,
                                precision=self.precision, seed=self.seed)
        data = DataConfig(max_code_len=self.max_code_len, max_summary_len=self.max_summary_len,
                          vocab_size=self.vocab_size)
        decode = DecodeConfig(beam_size=self.beam_size, max_len=self.max_summary_len)
        return RunConfig(model, train_cfg, data, decode).validate()

    def _examples(self, X, y, limits, training):
        programs = check_programs(X)
        summaries = None if y is None else check_summaries(y, len(programs))
        if not training:
            return to_examples(programs, summaries, limits)
        kept, rejected = to_examples(programs, summaries, limits, filter_training=True)
        if not kept:
            raise DataFormatError("no usable training pairs (need >= 2 AST nodes and >= 2 summary words)")
        return kept, rejected

    def fit(self, X, y, X_valid=None, y_valid=None):
        """Train from scratch. Without a validation set, early stopping watches the training pairs."""
        cfg = self.to_run_config()
        limits = data_limits(cfg)
        examples, rejected = self._examples(X, y, limits, training=True)
        if X_valid is None:
            valid = examples
        else:
            valid, _ = self._examples(X_valid, y_valid, limits, training=True)
        result = train(examples, valid, cfg)
        self.model_ = result.model
        self.vocabs_ = result.checkpoint.vocabs
        self.config_ = cfg
        self.checkpoint_ = result.checkpoint
        # the run config clamps some values, keep the constructor arguments for load()
        self.checkpoint_.extra["estimator_params"] = self.get_params()
        self.history_ = result.history
        self.stop_reason_ = result.stop_reason
        self.n_rejected_ = len(rejected)
        return self

    def _builder(self):
        return BatchBuilder(self.vocabs_, self.config_.model.scale_count, data_limits(self.config_))

    def predict_tokens(self, X, greedy=False) -> list:
        check_is_fitted(self, "model_")
        examples = self._examples(X, None, data_limits(self.config_), training=False)
        decode = DecodeConfig(beam_size=self.beam_size, max_len=self.max_summary_len)
        return summarize(self.model_, self._builder(), self.vocabs_, examples, decode, greedy)

    def predict(self, X) -> np.ndarray:
        """One space-joined summary per program (beam search)."""
        return np.array([" ".join(t) for t in self.predict_tokens(X)], dtype=object)

    def evaluate(self, X, y):
        """:class:`~m2ts.metrics.MetricReport` for predictions against ``y``."""
        check_is_fitted(self, "model_")
        limits = data_limits(self.config_)
        examples = self._examples(X, y, limits, training=False)
        report, _ = evaluate_model(self.model_, self._builder(), self.vocabs_, examples,
                                   DecodeConfig(beam_size=self.beam_size, max_len=self.max_summary_len))
        return report

    def score(self, X, y) -> float:
        """Corpus BLEU-4 in [0, 1]."""
        refs = check_summaries(y)
        return bleu(list(zip(self.predict_tokens(X), refs)))

    def save(self, path):
        check_is_fitted(self, "model_")
        return ckpt_io.save(self.checkpoint_, path)

    @classmethod
    def load(cls, path) -> "M2TSSummarizer":
        ckpt = ckpt_io.load(path)
        model, vocabs, cfg = model_from_checkpoint(ckpt)
        m, t = cfg.model, cfg.train
        params = ckpt.extra.get("estimator_params")
        est = cls(**params) if params else cls(d_model=m.d_model, layers=m.layers, heads=m.heads, d_ff=m.d_ff, d_k=m.d_k, dropout=m.dropout,
                  scale_count=m.scale_count, scale_weights=m.scale_weights, residual=m.residual, fusion=m.fusion,
                  init_mode=m.init_mode, lr=t.lr, batch_size=t.batch_size, max_epochs=t.max_epochs,
                  patience=t.patience, eval_metric=t.eval_metric, precision=t.precision, seed=t.seed,
                  beam_size=cfg.decode.beam_size, max_summary_len=cfg.data.max_summary_len,
                  max_code_len=cfg.data.max_code_len, vocab_size=cfg.data.vocab_size)
        est.model_, est.vocabs_, est.config_, est.checkpoint_ = model, vocabs, cfg, ckpt
        est.history_ = ckpt.history
        est.stop_reason_ = ckpt.extra.get("stop_reason", "")
        est.n_rejected_ = 0
        return est


class AstScales(TransformerMixin, BaseEstimator):
    """Map programs or ASTs to their per-scale matrices.

    With ``normalized`` each item becomes a list of ``scale_count`` float
    matrices as fed to the graph encoder; otherwise the raw integer walk
    counts A, A^2, ... are returned.
    """

    def __init__(self, scale_count=3, normalized=True):
        self.scale_count = scale_count
        self.normalized = normalized

    def fit(self, X=None, y=None):
        if not 1 <= int(self.scale_count) <= 5:
            raise ConfigError(f"scale_count must be in [1, 5], got {self.scale_count}")
        self.fitted_ = True
        return self

    def transform(self, X) -> list:
        check_is_fitted(self, "fitted_")
        out = []
        for i, item in enumerate(X):
            graph = item if isinstance(item, AstGraph) else check_program(item, i)[1]
            if self.normalized:
                out.append(build_scales(graph, self.scale_count))
            else:
                a = adjacency(graph)
                out.append([power(a, m) for m in range(1, self.scale_count + 1)])
        return out
