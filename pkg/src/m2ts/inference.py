"""Summary generation and metric evaluation for a trained model."""
from __future__ import annotations

import numpy as np

from . import numerics as nx
from .config import DecodeConfig
from .corpus import BatchBuilder, Vocabs
from .metrics import evaluate
from .model import M2TSModel, beam_decode, greedy_decode


def step_function(model: M2TSModel, memory):
    """Adapt one encoded example to the ``step_fn(prefixes)`` decoding interface."""
    def step(prefixes):
        rows = np.zeros(len(prefixes), dtype=np.int64)
        return model.next_log_probs(memory.take(rows), prefixes)
    return step


def generate(model: M2TSModel, builder: BatchBuilder, examples, decode: DecodeConfig = None,
             greedy: bool = False) -> list:
    """Token-id summaries for ``examples`` (BOS/EOS stripped)."""
    decode = decode or DecodeConfig()
    was_training = model.training
    model.eval()
    out = []
    try:
        with nx.no_grad():
            for ex in examples:
                memory = model.encode(builder.build([ex], with_targets=False))
                step = step_function(model, memory)
                if greedy:
                    out.append(greedy_decode(step, decode.max_len))
                else:
                    out.append(beam_decode(step, decode.beam_size, decode.max_len, decode.len_norm))
    finally:
        model.train(was_training)
    return out


def summarize(model, builder, vocabs: Vocabs, examples, decode=None, greedy=False) -> list:
    """Summaries as token lists."""
    return [vocabs.nl.decode(ids) for ids in generate(model, builder, examples, decode, greedy)]


def evaluate_model(model, builder, vocabs, examples, decode=None, greedy=False):
    hyps = summarize(model, builder, vocabs, examples, decode, greedy)
    report = evaluate([(h, ex.summary_tokens) for h, ex in zip(hyps, examples)])
    return report, hyps


def mean_loss(model: M2TSModel, builder: BatchBuilder, examples, batch_size=32) -> float:
    """Example-weighted mean loss with dropout off and no graph recording."""
    was_training = model.training
    model.eval()
    total = 0.0
    try:
        with nx.no_grad():
            for start in range(0, len(examples), batch_size):
                chunk = examples[start:start + batch_size]
                total += float(model.loss(builder.build(chunk)).data) * len(chunk)
    finally:
        model.train(was_training)
    return total / len(examples)
