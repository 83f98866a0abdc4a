"""Independent reference computations used by ``verify`` and the test-suite.

Nothing here calls into the code paths it is used to check: walks are
enumerated explicitly, attention is written per head with plain numpy, and
so on.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np


# -- trees and walks ---------------------------------------------------------

def rooted_trees(n):
    """Every unlabeled rooted tree on ``n`` nodes, as preorder parent arrays.

    Uses canonical level sequences (Beyer & Hedetniemi successor rule).
    ``parents[0]`` is -1; node ids follow preorder.
    """
    if n == 1:
        yield [-1]
        return
    levels = list(range(n))
    while True:
        yield _levels_to_parents(levels)
        p = max((i for i in range(n) if levels[i] > 1), default=None)
        if p is None:
            return
        q = max(i for i in range(p) if levels[i] == levels[p] - 1)
        for i in range(p, n):
            levels[i] = levels[i - (p - q)]


def _levels_to_parents(levels):
    parents, stack = [], []
    for lvl in levels:
        while len(stack) > lvl:
            stack.pop()
        parents.append(stack[-1] if stack else -1)
        stack.append(len(parents) - 1)
    return parents


def parents_to_edges(parents):
    return [(p, c) for c, p in enumerate(parents) if p >= 0]


def walk_counts(n, edges, m):
    """Count length-``m`` walks between all node pairs by explicit enumeration."""
    nbrs = {i: [] for i in range(n)}
    for p, c in edges:
        nbrs[p].append(c)
        nbrs[c].append(p)
    out = np.zeros((n, n), dtype=np.int64)
    for start in range(n):
        frontier = [start]
        for _ in range(m):
            frontier = [nb for node in frontier for nb in nbrs[node]]
        for end in frontier:
            out[start, end] += 1
    return out


def normalize_loops(a):
    """Symmetric normalization written elementwise."""
    n = len(a)
    tilde = [[float(a[i][j]) + (1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    deg = [sum(row) for row in tilde]
    return np.array([[tilde[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)] for i in range(n)])


# -- sequences ---------------------------------------------------------------

def lcs_exhaustive(a, b):
    """Longest common subsequence by enumerating subsequences of ``a``."""
    def is_subseq(sub, seq):
        it = iter(seq)
        return all(tok in it for tok in sub)

    for k in range(len(a), 0, -1):
        for idx in itertools.combinations(range(len(a)), k):
            if is_subseq([a[i] for i in idx], b):
                return k
    return 0


def cider_bruteforce(pairs, n=4, scale=10.0):
    """Dense-vector tf-idf cosine, averaged over orders 1..n, per pair."""
    size = len(pairs)

    def grams(tokens, k):
        return [tuple(tokens[i:i + k]) for i in range(len(tokens) - k + 1)]

    scores = []
    for gen, ref in pairs:
        total = 0.0
        for k in range(1, n + 1):
            universe = sorted({g for g2, r2 in pairs for g in grams(g2, k) + grams(r2, k)})
            if not universe:
                continue
            idf = np.array([math.log(size / max(1, sum(1 for _, r in pairs if g in set(grams(r, k)))))
                            for g in universe])

            def vec(tokens):
                c = Counter(grams(tokens, k))
                length = max(len(tokens) - k + 1, 1)
                return np.array([c[g] / length for g in universe]) * idf

            u, v = vec(gen), vec(ref)
            nu, nv = np.linalg.norm(u), np.linalg.norm(v)
            total += 0.0 if nu == 0 or nv == 0 else float(u @ v) / (nu * nv) / n
        scores.append(scale * total)
    return scores


# -- attention / graph layers ------------------------------------------------

def softmax_masked(scores, keep):
    out = np.zeros_like(scores, dtype=np.float64)
    for i in range(scores.shape[0]):
        idx = [j for j in range(scores.shape[1]) if keep[i][j]]
        vals = np.array([scores[i, j] for j in idx])
        e = np.exp(vals - vals.max())
        for j, w in zip(idx, e / e.sum()):
            out[i, j] = w
    return out


def multi_head_reference(xq, xkv, w_q, w_k, w_v, w_o, heads, keep):
    """Per-head attention for one example: xq [Lq, d], xkv [Lk, d], keep [Lq, Lk]."""
    d_k = w_q.shape[1] // heads
    outs = []
    for h in range(heads):
        sl = slice(h * d_k, (h + 1) * d_k)
        q, k, v = xq @ w_q[:, sl], xkv @ w_k[:, sl], xkv @ w_v[:, sl]
        outs.append(softmax_masked(q @ k.T / math.sqrt(d_k), keep) @ v)
    return np.concatenate(outs, axis=1) @ w_o


def gcn_reference(h, a_hat, w, residual=True):
    out = np.maximum(a_hat @ h @ w, 0.0)
    return out + h if residual else out


def msa_reference(h0, scale_mats, layer_weights, scale_weights, residual=True):
    h, zs = h0, []
    for a_hat, (w1, w2) in zip(scale_mats, layer_weights):
        h = gcn_reference(gcn_reference(h, a_hat, w1, residual), a_hat, w2, residual)
        zs.append(h)
    return sum(w * z for w, z in zip(scale_weights, zs)), zs


def acf_reference(z, z_prime, m, wq, bq, wk, bk, wv, bv, d_k, code_keep):
    q, k, v = z_prime @ wq + bq, m @ wk + bk, m @ wv + bv
    keep = np.tile(np.asarray(code_keep, dtype=bool), (len(z), 1))
    return z + softmax_masked(q @ k.T / math.sqrt(d_k), keep) @ v


# -- decoding ----------------------------------------------------------------

def best_sequence(step_fn, vocab, max_len, eos, bos, len_norm=0.0):
    """Exhaustively score every sequence ending in EOS within ``max_len`` tokens."""
    best, best_score = None, -math.inf
    for length in range(0, max_len):
        for body in itertools.product([t for t in range(vocab) if t != eos], repeat=length):
            seq, total = [bos], 0.0
            for tok in list(body) + [eos]:
                total += float(step_fn(np.array([seq]))[0][tok])
                seq.append(tok)
            score = total / (length + 1) ** len_norm
            if score > best_score:
                best, best_score = list(body), score
    return best, best_score
