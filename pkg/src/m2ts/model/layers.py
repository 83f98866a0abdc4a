"""Parameter containers and transformer building blocks."""
from __future__ import annotations

import math

import numpy as np

from .. import numerics as nx
from ..errors import ConfigError
from ..numerics import Rng, Tensor


class Context:
    """Forward-pass switches shared by every module of one model."""

    def __init__(self, dropout=0.0):
        self.training = False
        self.dropout = dropout
        self.rng = None

    def drop(self, x):
        if not self.training or self.dropout <= 0:
            return x
        if self.rng is None:
            raise RuntimeError("training mode needs a dropout Rng; call set_dropout_rng()")
        return nx.dropout(x, self.dropout, self.rng, training=True)


class Module:
    def named_parameters(self, prefix=""):
        for key, value in vars(self).items():
            if key.startswith("_"):
                continue
            name = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")
                    elif isinstance(item, Tensor) and item.requires_grad:
                        yield f"{name}.{i}", item

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


def uniform_param(rng: Rng, name: str, shape, fan_in: int) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    values = rng.split(name).uniform(-bound, bound, shape)
    return Tensor(values, requires_grad=True, name=name)


def ones_param(name, shape):
    return Tensor(np.ones(shape), requires_grad=True, name=name)


def zeros_param(name, shape):
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


class Linear(Module):
    def __init__(self, d_in, d_out, rng: Rng, bias=True):
        self.weight = uniform_param(rng, "weight", (d_in, d_out), d_in)
        self.bias = uniform_param(rng, "bias", (d_out,), d_in) if bias else None

    def __call__(self, x):
        y = nx.matmul(x, self.weight)
        return y if self.bias is None else y + self.bias


class Embedding(Module):
    """Lookup table scaled by sqrt(dim) on the way out."""

    def __init__(self, num, dim, rng: Rng):
        self.table = uniform_param(rng, "table", (num, dim), dim)
        self._scale = math.sqrt(dim)

    def __call__(self, ids):
        return nx.scale(nx.embedding(self.table, ids), self._scale)


class LayerNorm(Module):
    def __init__(self, dim, eps=1e-5):
        self.gain = ones_param("gain", (dim,))
        self.bias = zeros_param("bias", (dim,))
        self._eps = eps

    def __call__(self, x):
        return nx.layer_norm(x, self.gain, self.bias, self._eps)


def positional_encoding(length: int, d: int) -> np.ndarray:
    """Sinusoidal table: sin on even dims, cos on odd dims, wavelength base 10000."""
    if d % 2:
        raise ConfigError(f"positional encoding needs an even dimension, got {d}")
    pos = np.arange(length, dtype=np.float64)[:, None]
    rates = 10000.0 ** (np.arange(0, d, 2, dtype=np.float64) / d)
    pe = np.zeros((length, d))
    pe[:, 0::2] = np.sin(pos / rates)
    pe[:, 1::2] = np.cos(pos / rates)
    return pe


def add_positions(x: Tensor) -> Tensor:
    length, d = x.shape[-2], x.shape[-1]
    return x + Tensor(positional_encoding(length, d), dtype=x.dtype)


def key_mask(mask):
    """[B, Lk] keep-mask -> [B, 1, 1, Lk] for per-head scores."""
    return np.asarray(mask, dtype=bool)[:, None, None, :]


def causal_mask(mask):
    """Combine a [B, L] keep-mask with lower-triangular causality -> [B, 1, L, L]."""
    mask = np.asarray(mask, dtype=bool)
    length = mask.shape[1]
    tri = np.tril(np.ones((length, length), dtype=bool))
    return tri[None, None] & mask[:, None, None, :]


def scaled_attention(q, k, v, mask, d_k):
    scores = nx.scale(nx.matmul(q, nx.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(d_k))
    weights = nx.softmax_rows(scores, mask)
    return nx.matmul(weights, v), weights


class MultiHeadAttention(Module):
    """Concat_i softmax(Q_i K_i^T / sqrt(d_k)) V_i, projected by W^O.

    Inputs are [B, L, d_model]; ``mask`` broadcasts against [B, heads, Lq, Lk].
    """

    def __init__(self, d_model, heads, d_k, rng: Rng):
        self.heads, self.d_k = heads, d_k
        self.w_q = uniform_param(rng, "w_q", (d_model, heads * d_k), d_model)
        self.w_k = uniform_param(rng, "w_k", (d_model, heads * d_k), d_model)
        self.w_v = uniform_param(rng, "w_v", (d_model, heads * d_k), d_model)
        self.w_o = uniform_param(rng, "w_o", (heads * d_k, d_model), heads * d_k)
        self._last_weights = None

    def _split(self, x):
        b, length, _ = x.shape
        return nx.transpose(nx.reshape(x, (b, length, self.heads, self.d_k)), (0, 2, 1, 3))

    def __call__(self, q_in, kv_in, mask):
        q = self._split(nx.matmul(q_in, self.w_q))
        k = self._split(nx.matmul(kv_in, self.w_k))
        v = self._split(nx.matmul(kv_in, self.w_v))
        heads, weights = scaled_attention(q, k, v, mask, self.d_k)
        self._last_weights = weights.data
        b, _, lq, _ = heads.shape
        merged = nx.reshape(nx.transpose(heads, (0, 2, 1, 3)), (b, lq, self.heads * self.d_k))
        return nx.matmul(merged, self.w_o)

    @property
    def last_weights(self):
        return self._last_weights


class FeedForward(Module):
    def __init__(self, d_model, d_ff, rng: Rng):
        self.inner = Linear(d_model, d_ff, rng.split("inner"))
        self.outer = Linear(d_ff, d_model, rng.split("outer"))

    def __call__(self, x):
        return self.outer(nx.relu(self.inner(x)))


class EncoderLayer(Module):
    """Post-norm block: self-attention, add & norm, feed-forward, add & norm."""

    def __init__(self, cfg, ctx: Context, rng: Rng):
        self._ctx = ctx
        self.attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.head_dim, rng.split("attn"))
        self.norm1 = LayerNorm(cfg.d_model, cfg.ln_eps)
        self.ffn = FeedForward(cfg.d_model, cfg.d_ff, rng.split("ffn"))
        self.norm2 = LayerNorm(cfg.d_model, cfg.ln_eps)

    def __call__(self, x, mask):
        x = self.norm1(x + self._ctx.drop(self.attn(x, x, mask)))
        return self.norm2(x + self._ctx.drop(self.ffn(x)))


class Encoder(Module):
    def __init__(self, cfg, ctx: Context, rng: Rng):
        self.layers = [EncoderLayer(cfg, ctx, rng.split(f"layer{i}")) for i in range(cfg.layers)]

    def __call__(self, x, mask):
        """``x`` already carries position information; ``mask`` is [B, L]."""
        m = key_mask(mask)
        for layer in self.layers:
            x = layer(x, m)
        return x


class DecoderLayer(Module):
    """Masked-NL attention, code attention, fused-feature attention, feed-forward."""

    def __init__(self, cfg, ctx: Context, rng: Rng):
        self._ctx = ctx
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.head_dim, rng.split("self_attn"))
        self.norm1 = LayerNorm(cfg.d_model, cfg.ln_eps)
        self.code_attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.head_dim, rng.split("code_attn"))
        self.norm2 = LayerNorm(cfg.d_model, cfg.ln_eps)
        self.fused_attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.head_dim, rng.split("fused_attn"))
        self.norm3 = LayerNorm(cfg.d_model, cfg.ln_eps)
        self.ffn = FeedForward(cfg.d_model, cfg.d_ff, rng.split("ffn"))
        self.norm4 = LayerNorm(cfg.d_model, cfg.ln_eps)

    def __call__(self, s, self_mask, code, code_mask, fused, fused_mask):
        drop = self._ctx.drop
        s1 = self.norm1(s + drop(self.self_attn(s, s, self_mask)))
        s2 = self.norm2(s1 + drop(self.code_attn(s1, code, code_mask)))
        s3 = self.norm3(s2 + drop(self.fused_attn(s2, fused, fused_mask)))
        return self.norm4(s3 + drop(self.ffn(s3)))
