"""The full summarizer: MSA embedding, two encoders, fusion and combined decoder."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import numerics as nx
from ..config import ModelConfig
from ..corpus import PAD, Batch
from ..numerics import Rng, Tensor
from .fusion import ACFFusion, AdditiveFusion
from .layers import (Context, DecoderLayer, Embedding, Encoder, Linear, Module, add_positions,
                     causal_mask, key_mask)
from .msa import MsaOutput, MultiScaleGCN, NodeInit


@dataclass
class Memory:
    """Encoder-side results consumed by the decoder."""
    code: Tensor             # M
    code_mask: np.ndarray
    fused: Tensor            # F'
    node_mask: np.ndarray
    ast: Optional[Tensor] = None       # Z'
    msa: Optional[MsaOutput] = None

    def take(self, rows):
        rows = np.asarray(rows)
        return Memory(Tensor(self.code.data[rows], dtype=self.code.dtype), self.code_mask[rows],
                      Tensor(self.fused.data[rows], dtype=self.fused.dtype), self.node_mask[rows])


class M2TSModel(Module):
    def __init__(self, cfg: ModelConfig, code_vocab: int, nl_vocab: int, node_vocab: int, seed: int = 0):
        cfg.validate()
        self._cfg = cfg
        self._ctx = Context(cfg.dropout)
        self._sizes = (code_vocab, nl_vocab, node_vocab)
        rng = Rng(seed).split("params")
        d = cfg.d_model
        self.node_init = NodeInit(cfg.init_mode, node_vocab, d, rng.split("node_init"))
        self.msa = MultiScaleGCN(cfg, rng.split("msa"))
        self.ast_encoder = Encoder(cfg, self._ctx, rng.split("ast_encoder"))
        self.code_embed = Embedding(code_vocab, d, rng.split("code_embed"))
        self.code_encoder = Encoder(cfg, self._ctx, rng.split("code_encoder"))
        if cfg.fusion == "acf":
            self.fusion = ACFFusion(d, cfg.fusion_d_k, rng.split("fusion"))
        else:
            self.fusion = AdditiveFusion(d, rng.split("fusion"))
        self.nl_embed = Embedding(nl_vocab, d, rng.split("nl_embed"))
        self.decoder = [DecoderLayer(cfg, self._ctx, rng.split(f"decoder{i}")) for i in range(cfg.layers)]
        self.out_proj = Linear(d, nl_vocab, rng.split("out_proj"))
        self._last_state = None

    @property
    def config(self) -> ModelConfig:
        return self._cfg

    @property
    def vocab_sizes(self):
        return self._sizes

    @property
    def dtype(self):
        return self.out_proj.weight.dtype

    @property
    def training(self):
        return self._ctx.training

    def train(self, mode=True):
        self._ctx.training = bool(mode)
        return self

    def eval(self):
        return self.train(False)

    def set_dropout_rng(self, rng: Optional[Rng]):
        self._ctx.rng = rng

    # -- parameters ---------------------------------------------------------
    def state_dict(self) -> dict:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict):
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        unexpected = set(state) - set(params)
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(unexpected)}")
        for name, p in params.items():
            if tuple(state[name].shape) != p.shape:
                raise ValueError(f"shape mismatch for {name}: {state[name].shape} vs {p.shape}")
            p.assign(state[name])

    def astype(self, dtype):
        """Cast every parameter in place (used to switch to 64-bit checking)."""
        for _, p in self.named_parameters():
            p.data = np.array(p.data, dtype=dtype)
            p.data.flags.writeable = False
            p.grad = np.zeros_like(p.data)
        return self

    # -- forward ------------------------------------------------------------
    def _const(self, arr):
        return Tensor(arr, dtype=self.dtype)

    def embed_ast(self, batch: Batch) -> MsaOutput:
        h0 = self.node_init(batch.node_ids, batch.node_features, batch.node_mask, self.dtype)
        return self.msa(h0, [self._const(a) for a in batch.scales])

    def encode(self, batch: Batch) -> Memory:
        msa = self.embed_ast(batch)
        drop = self._ctx.drop
        z_prime = self.ast_encoder(drop(add_positions(msa.z)), batch.node_mask)
        m = self.code_encoder(drop(add_positions(self.code_embed(batch.code_ids))), batch.code_mask)
        if self._cfg.fusion == "acf":
            fused = self.fusion(msa.z, z_prime, m, batch.code_mask)
        else:
            fused = self.fusion(msa.z, z_prime, m, batch.code_mask, batch.node_mask)
        return Memory(m, batch.code_mask, fused, batch.node_mask, z_prime, msa)

    def decode(self, memory: Memory, nl_in) -> Tensor:
        nl_in = np.asarray(nl_in)
        s = self._ctx.drop(add_positions(self.nl_embed(nl_in)))
        self_mask = causal_mask(nl_in != PAD)
        code_mask = key_mask(memory.code_mask)
        node_mask = key_mask(memory.node_mask)
        for layer in self.decoder:
            s = layer(s, self_mask, memory.code, code_mask, memory.fused, node_mask)
        return self.out_proj(s)

    def forward(self, batch: Batch) -> Tensor:
        return self.decode(self.encode(batch), batch.nl_in)

    __call__ = forward

    def loss(self, batch: Batch) -> Tensor:
        """Token-mean cross entropy per summary, averaged over the batch."""
        return nx.cross_entropy(self.forward(batch), batch.nl_out, ignore_id=PAD)

    def next_log_probs(self, memory: Memory, prefixes) -> np.ndarray:
        """Log-distribution over the next token for each prefix row."""
        with nx.no_grad():
            logits = self.decode(memory, prefixes).data[:, -1, :].astype(np.float64)
        return nx.ops.log_softmax_np(logits)
