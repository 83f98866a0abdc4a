"""Fusion of encoded AST features with encoded code-token features."""
from __future__ import annotations

import math

import numpy as np

from .. import numerics as nx
from ..errors import DimensionError
from ..numerics import Rng
from .layers import Linear, Module, uniform_param


class ACFFusion(Module):
    """AST-as-query cross attention over code tokens, plus a residual of Z.

    Q_f, K_f, V_f are position-wise (1x1) projections that keep d_model.
    F = softmax(Q_f K_f^T / sqrt(d_k)) V_f with code padding masked, and the
    output is F' = Z + F where Z is the multi-scale embedding (not Z').
    """

    def __init__(self, d_model, d_k, rng: Rng):
        self.proj_q = Linear(d_model, d_model, rng.split("proj_q"))
        self.proj_k = Linear(d_model, d_model, rng.split("proj_k"))
        self.proj_v = Linear(d_model, d_model, rng.split("proj_v"))
        self._d_k = d_k
        self.last_weights = None

    def __call__(self, z, z_prime, code, code_mask):
        if z.shape != z_prime.shape:
            raise DimensionError(f"acf_fuse: Z {z.shape} and Z' {z_prime.shape} differ")
        q = self.proj_q(z_prime)
        k = self.proj_k(code)
        v = self.proj_v(code)
        scores = nx.scale(nx.matmul(q, nx.transpose(k, (0, 2, 1))), 1.0 / math.sqrt(self._d_k))
        weights = nx.softmax_rows(scores, np.asarray(code_mask, dtype=bool)[:, None, :])
        self.last_weights = weights.data
        return z + nx.matmul(weights, v)


class AdditiveAttention(Module):
    """Bahdanau-style pooling: score_ij = v . tanh(W_q q_i + W_k x_j)."""

    def __init__(self, d_model, rng: Rng):
        self.w_q = uniform_param(rng, "w_q", (d_model, d_model), d_model)
        self.w_k = uniform_param(rng, "w_k", (d_model, d_model), d_model)
        self.v = uniform_param(rng, "v", (d_model, 1), d_model)
        self.last_weights = None

    def __call__(self, queries, keys, mask):
        b, lq, d = queries.shape
        lk = keys.shape[1]
        qp = nx.reshape(nx.matmul(queries, self.w_q), (b, lq, 1, d))
        kp = nx.reshape(nx.matmul(keys, self.w_k), (b, 1, lk, d))
        scores = nx.reshape(nx.matmul(nx.tanh(qp + kp), self.v), (b, lq, lk))
        weights = nx.softmax_rows(scores, np.asarray(mask, dtype=bool)[:, None, :])
        self.last_weights = weights.data
        return nx.matmul(weights, keys)


class AdditiveFusion(Module):
    """Ablation fusion: pool each modality with additive attention and sum."""

    def __init__(self, d_model, rng: Rng):
        self.ast_attn = AdditiveAttention(d_model, rng.split("ast"))
        self.code_attn = AdditiveAttention(d_model, rng.split("code"))

    def __call__(self, z, z_prime, code, code_mask, node_mask):
        if z.shape != z_prime.shape:
            raise DimensionError(f"additive fuse: Z {z.shape} and Z' {z_prime.shape} differ")
        return self.ast_attn(z_prime, z_prime, node_mask) + self.code_attn(z_prime, code, code_mask)
