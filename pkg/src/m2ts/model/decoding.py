"""Greedy and beam-search generation over a next-token log-probability function.

``step_fn(prefixes)`` takes an int array [k, t] of BOS-led prefixes and
returns log-probabilities [k, V] for the next token of each row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import BOS, EOS


@dataclass
class Hypothesis:
    tokens: list          # generated ids, EOS excluded
    logprob: float
    finished: bool

    def score(self, len_norm: float) -> float:
        length = len(self.tokens) + (1 if self.finished else 0)
        return self.logprob / max(length, 1) ** len_norm


def greedy_decode(step_fn, max_len: int, bos: int = BOS, eos: int = EOS) -> list:
    """Append the argmax token (lowest id on ties) until EOS or ``max_len`` tokens."""
    tokens = []
    for _ in range(max_len):
        logp = step_fn(np.array([[bos] + tokens], dtype=np.int64))[0]
        best = int(np.argmax(logp))
        if best == eos:
            break
        tokens.append(best)
    return tokens


def beam_search(step_fn, width: int = 5, max_len: int = 30, len_norm: float = 0.7,
                bos: int = BOS, eos: int = EOS) -> list:
    """Return every surviving hypothesis, best first under length normalization.

    Hypotheses cut off at ``max_len`` compete with finished ones. The search
    stops early only once no live prefix can still beat the best finished
    score, so the result equals running all ``max_len`` steps.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    live = [Hypothesis([], 0.0, False)]
    finished = []
    for _ in range(max_len):
        prefixes = np.array([[bos] + h.tokens for h in live], dtype=np.int64)
        logp = np.asarray(step_fn(prefixes), dtype=np.float64)
        totals = np.array([h.logprob for h in live])[:, None] + logp
        k, vocab = totals.shape
        # order by score desc, then hypothesis rank, then token id
        flat = totals.reshape(-1)
        order = np.lexsort((np.arange(flat.size), -flat))[:width]
        survivors = []
        for idx in order:
            i, tok = divmod(int(idx), vocab)
            if not np.isfinite(flat[idx]):
                continue
            if tok == eos:
                finished.append(Hypothesis(list(live[i].tokens), float(flat[idx]), True))
            else:
                survivors.append(Hypothesis(live[i].tokens + [tok], float(flat[idx]), False))
        live = survivors
        if not live:
            break
        if finished:
            # log-probs are <= 0, so a live prefix can at best keep its sum and grow to max_len
            best = max(h.score(len_norm) for h in finished)
            if best >= max(h.logprob for h in live) / max_len ** len_norm:
                break
    pool = finished + live
    ranked = sorted(enumerate(pool), key=lambda item: (-item[1].score(len_norm), item[0]))
    return [h for _, h in ranked]


def beam_decode(step_fn, width: int = 5, max_len: int = 30, len_norm: float = 0.7,
                bos: int = BOS, eos: int = EOS) -> list:
    """Best hypothesis token ids with BOS/EOS stripped."""
    return beam_search(step_fn, width, max_len, len_norm, bos, eos)[0].tokens
