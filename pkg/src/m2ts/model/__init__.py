from .decoding import Hypothesis, beam_decode, beam_search, greedy_decode
from .fusion import ACFFusion, AdditiveAttention, AdditiveFusion
from .layers import (Context, Encoder, EncoderLayer, DecoderLayer, Linear, LayerNorm, Module,
                     MultiHeadAttention, positional_encoding)
from .m2ts import M2TSModel, Memory
from .msa import MsaOutput, MultiScaleGCN, NodeInit, gcn_layer

__all__ = [
    "ACFFusion", "AdditiveAttention", "AdditiveFusion", "Context", "DecoderLayer", "Encoder",
    "EncoderLayer", "Hypothesis", "LayerNorm", "Linear", "M2TSModel", "Memory", "Module",
    "MsaOutput", "MultiHeadAttention", "MultiScaleGCN", "NodeInit", "beam_decode", "beam_search",
    "gcn_layer", "greedy_decode", "positional_encoding",
]
