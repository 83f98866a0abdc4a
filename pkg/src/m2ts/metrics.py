"""Corpus-level BLEU-4, METEOR, ROUGE_L and CIDEr over single-reference pairs.

All functions take ``pairs`` as a sequence of ``(generated, reference)``
token lists.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import M2TSError


class EmptyCorpusError(M2TSError, ValueError):
    exit_code = 5


def _check(pairs):
    pairs = [(list(g), list(r)) for g, r in pairs]
    if not pairs:
        raise EmptyCorpusError("metric needs at least one (generated, reference) pair")
    return pairs


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def lcs(a, b) -> int:
    """Length of the longest common subsequence.

    Bit-parallel form of the usual DP recurrence: one machine word holds a
    whole DP column over ``a`` and each token of ``b`` updates it in O(1)
    big-int operations. A cleared bit marks a row where the column steps up.
    """
    if not a or not b:
        return 0
    masks, bit = {}, 1
    for x in a:
        masks[x] = masks.get(x, 0) | bit
        bit <<= 1
    full = bit - 1
    v, get = full, masks.get
    for y in b:
        u = v & get(y, 0)
        v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


def bleu(pairs, n: int = 4, smooth: bool = True) -> float:
    """Corpus BLEU with pooled clipped counts and brevity penalty.

    With ``smooth``, a zero precision for orders >= 2 becomes
    ``1 / (denominator + 1)``; a zero unigram precision always yields 0.
    """
    pairs = _check(pairs)
    matches, totals = [0] * n, [0] * n
    gen_len = ref_len = 0
    for gen, ref in pairs:
        gen_len += len(gen)
        ref_len += len(ref)
        for k in range(1, n + 1):
            g, r = ngrams(gen, k), ngrams(ref, k)
            matches[k - 1] += sum(min(c, r[gram]) for gram, c in g.items())
            totals[k - 1] += max(len(gen) - k + 1, 0)
    if matches[0] == 0 or gen_len == 0:
        return 0.0
    log_p = 0.0
    for k in range(n):
        m, t = matches[k], totals[k]
        if m == 0:
            if not smooth:
                return 0.0
            m, t = 1, t + 1
        log_p += math.log(m / t) / n
    bp = 1.0 if gen_len > ref_len else math.exp(1 - ref_len / gen_len)
    return bp * math.exp(log_p)


def _align(gen, ref):
    """Exact-match alignment built from longest unmatched common runs, leftmost first."""
    used_g, used_r = [False] * len(gen), [False] * len(ref)
    links = []
    while True:
        best = (0, 0, 0)
        for i in range(len(gen)):
            for j in range(len(ref)):
                k = 0
                while (i + k < len(gen) and j + k < len(ref) and not used_g[i + k]
                       and not used_r[j + k] and gen[i + k] == ref[j + k]):
                    k += 1
                if k > best[0]:
                    best = (k, i, j)
        k, i, j = best
        if k == 0:
            break
        for off in range(k):
            used_g[i + off] = used_r[j + off] = True
            links.append((i + off, j + off))
    return sorted(links)


def meteor_pair(gen, ref, alpha=0.9, beta=3.0, gamma=0.5) -> float:
    links = _align(gen, ref)
    m = len(links)
    if m == 0:
        return 0.0
    chunks = 1
    for (g0, r0), (g1, r1) in zip(links, links[1:]):
        if not (g1 == g0 + 1 and r1 == r0 + 1):
            chunks += 1
    p, r = m / len(gen), m / len(ref)
    fmean = p * r / (alpha * p + (1 - alpha) * r)
    penalty = gamma * (chunks / m) ** beta
    return (1 - penalty) * fmean


def meteor(pairs, alpha=0.9, beta=3.0, gamma=0.5) -> float:
    pairs = _check(pairs)
    return sum(meteor_pair(g, r, alpha, beta, gamma) for g, r in pairs) / len(pairs)


def rouge_l_pair(gen, ref, beta=1.2) -> float:
    common = lcs(gen, ref)
    if common == 0:
        return 0.0
    p, r = common / len(gen), common / len(ref)
    denom = r + beta ** 2 * p
    return 0.0 if denom == 0 else (1 + beta ** 2) * p * r / denom


def rouge_l(pairs, beta=1.2) -> float:
    pairs = _check(pairs)
    return sum(rouge_l_pair(g, r, beta) for g, r in pairs) / len(pairs)


def _tfidf(tokens, n, df, corpus_size):
    counts = ngrams(tokens, n)
    length = max(len(tokens) - n + 1, 1)
    return {gram: (c / length) * math.log(corpus_size / max(df.get(gram, 0), 1))
            for gram, c in counts.items()}


def _cosine(u, v):
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * v.get(g, 0.0) for g, x in u.items()) / (nu * nv)


def cider_scores(pairs, n: int = 4, scale: float = 10.0) -> list:
    """Per-pair CIDEr: ``scale * sum_n (1/n) cos(tfidf_n(gen), tfidf_n(ref))``.

    Document frequencies come from the references; n-grams absent from every
    reference are given df = 1.
    """
    pairs = _check(pairs)
    size = len(pairs)
    dfs = []
    for k in range(1, n + 1):
        df = Counter()
        for _, ref in pairs:
            df.update(set(ngrams(ref, k)))
        dfs.append(df)
    scores = []
    for gen, ref in pairs:
        total = 0.0
        for k in range(1, n + 1):
            total += _cosine(_tfidf(gen, k, dfs[k - 1], size), _tfidf(ref, k, dfs[k - 1], size)) / n
        scores.append(scale * total)
    return scores


def cider(pairs, n: int = 4, scale: float = 10.0) -> float:
    scores = cider_scores(pairs, n, scale)
    return sum(scores) / len(scores)


@dataclass
class MetricReport:
    bleu4: float
    meteor: float
    rouge_l: float
    cider: float
    per_example: list = field(default_factory=list)

    def to_dict(self, with_examples=False):
        d = {"bleu4": self.bleu4, "meteor": self.meteor, "rouge_l": self.rouge_l, "cider": self.cider}
        if with_examples:
            d["per_example"] = self.per_example
        return d

    def format(self) -> str:
        return (f"BLEU-4 {100 * self.bleu4:.2f}%  METEOR {100 * self.meteor:.2f}%  "
                f"ROUGE_L {100 * self.rouge_l:.2f}%  CIDER {self.cider:.3f}")


def evaluate(pairs) -> MetricReport:
    pairs = _check(pairs)
    ciders = cider_scores(pairs)
    per = [{"bleu4": bleu([p]), "meteor": meteor_pair(*p), "rouge_l": rouge_l_pair(*p), "cider": c}
           for p, c in zip(pairs, ciders)]
    return MetricReport(bleu(pairs), meteor(pairs), rouge_l(pairs), sum(ciders) / len(ciders), per)
