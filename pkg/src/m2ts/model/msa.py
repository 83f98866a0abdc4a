"""Multi-scale AST embedding: cascaded residual GCNs, one pair of layers per scale."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numerics as nx
from ..errors import ConfigError, DimensionError
from ..numerics import Rng, Tensor
from .layers import Embedding, Module, uniform_param


def gcn_layer(h, a_hat, w, residual=True):
    """relu(A_hat @ H @ W), plus H when ``residual``."""
    if h.shape[-1] != w.shape[0] or a_hat.shape[-1] != h.shape[-2]:
        raise DimensionError(f"gcn_layer: H {h.shape}, A_hat {a_hat.shape}, W {w.shape} do not agree")
    out = nx.relu(nx.matmul(nx.matmul(a_hat, h), w))
    return out + h if residual else out


class NodeInit(Module):
    """Initial node features from each node's type/value string.

    ``learned`` looks rows up in a trainable table over the node vocabulary;
    ``hashed`` draws a fixed vector per string from a seeded stream, so it
    needs no vocabulary and never trains.
    """

    def __init__(self, mode, vocab_size, dim, rng: Rng):
        if mode not in ("learned", "hashed"):
            raise ConfigError(f"unknown node init mode '{mode}'")
        self._mode = mode
        self._dim = dim
        self._hash_rng = rng.split("hashed")
        self._cache = {}
        self.embed = Embedding(vocab_size, dim, rng.split("embed")) if mode == "learned" else None

    @property
    def mode(self):
        return self._mode

    def hashed_vector(self, feature: str) -> np.ndarray:
        vec = self._cache.get(feature)
        if vec is None:
            vec = self._hash_rng.split(feature).uniform(-1.0, 1.0, self._dim)
            self._cache[feature] = vec
        return vec

    def __call__(self, node_ids, node_features, node_mask, dtype):
        keep = Tensor(np.asarray(node_mask, dtype=np.float64)[..., None], dtype=dtype)
        if self._mode == "learned":
            return self.embed(node_ids) * keep
        b, n = np.asarray(node_ids).shape
        out = np.zeros((b, n, self._dim))
        for i, feats in enumerate(node_features):
            for j, f in enumerate(feats):
                out[i, j] = self.hashed_vector(f)
        return Tensor(out, dtype=dtype) * keep


@dataclass
class MsaOutput:
    z: Tensor
    per_scale: list


class MultiScaleGCN(Module):
    """Z_1 = GCN2(A_hat_1, H0); Z_k = GCN2(A_hat_k, Z_{k-1}); Z = sum_k w_k Z_k."""

    def __init__(self, cfg, rng: Rng):
        d = cfg.d_model
        self._residual = cfg.residual
        self._share = cfg.share_scale_weights
        self._scale_count = cfg.scale_count
        pairs = 1 if cfg.share_scale_weights else cfg.scale_count
        self.weights = [[uniform_param(rng.split(f"scale{k}"), f"w{l}", (d, d), d) for l in range(2)]
                        for k in range(pairs)]
        # flatten for parameter discovery
        self.gcn = [w for pair in self.weights for w in pair]
        weights = cfg.resolved_weights()
        if cfg.trainable_scale_weights:
            self.scale_weights = Tensor(np.array(weights), requires_grad=True, name="scale_weights")
        else:
            self._fixed_weights = list(weights)

    def named_parameters(self, prefix=""):
        for i, w in enumerate(self.gcn):
            yield f"{prefix}gcn.{i}", w
        if hasattr(self, "scale_weights"):
            yield f"{prefix}scale_weights", self.scale_weights

    def __call__(self, h0, scales) -> MsaOutput:
        if len(scales) != self._scale_count:
            raise ConfigError(f"expected {self._scale_count} scale matrices, got {len(scales)}")
        h, per_scale = h0, []
        for k, a_hat in enumerate(scales):
            w1, w2 = self.weights[0 if self._share else k]
            h = gcn_layer(h, a_hat, w1, self._residual)
            h = gcn_layer(h, a_hat, w2, self._residual)
            per_scale.append(h)
        if hasattr(self, "scale_weights"):
            stacked = nx.concat([nx.reshape(z, z.shape + (1,)) for z in per_scale], axis=-1)
            w = nx.reshape(self.scale_weights, (self._scale_count, 1))
            z = nx.reshape(nx.matmul(stacked, w), per_scale[0].shape)
        else:
            z = None
            for wk, zk in zip(self._fixed_weights, per_scale):
                term = nx.scale(zk, wk)
                z = term if z is None else z + term
        return MsaOutput(z, per_scale)
