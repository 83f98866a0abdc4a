from .gradcheck import GradCheckReport, grad_check
from .ops import (add, concat, cross_entropy, dropout, embedding, layer_norm, matmul, mean,
                  mul, relu, reshape, scale, softmax_rows, sub, tanh, transpose)
from .ops import sum as tsum
from .optim import SGD, global_grad_norm, sgd_step
from .rng import Rng
from .tensor import Tensor, as_tensor, get_dtype, no_grad, precision, set_precision

__all__ = [
    "Tensor", "Rng", "SGD", "GradCheckReport", "add", "as_tensor", "concat", "cross_entropy",
    "dropout", "embedding", "get_dtype", "global_grad_norm", "grad_check", "layer_norm",
    "matmul", "mean", "mul", "no_grad", "precision", "relu", "reshape", "scale",
    "set_precision", "sgd_step", "softmax_rows", "sub", "tanh", "transpose", "tsum",
]
