"""Differentiable tensor ops.

Every op checks shapes up front and records a closure that accumulates
gradients into its parents. Elementwise ops follow numpy broadcasting; the
backward pass sums gradients back down to each operand's shape.
"""
from __future__ import annotations

import numpy as np

from ..errors import DegenerateMaskError, DimensionError, EmptyLossError
from .tensor import Tensor, as_tensor


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcast_shape(a, b, opname):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{opname}: shapes {a.shape} and {b.shape} do not broadcast") from None


# -- elementwise ---------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return Tensor._from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return Tensor._from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return Tensor._from_op(a.data * b.data, (a, b), backward, "mul")


def scale(a, c: float):
    """Multiply by a Python constant."""
    a = as_tensor(a)
    c = float(c)

    def backward(g):
        a._accumulate(g * c)

    return Tensor._from_op(a.data * a.data.dtype.type(c), (a,), backward, "scale")


def relu(a):
    a = as_tensor(a)
    positive = a.data > 0

    def backward(g):
        a._accumulate(g * positive)

    return Tensor._from_op(np.where(positive, a.data, 0).astype(a.data.dtype), (a,), backward, "relu")


def tanh(a):
    a = as_tensor(a)
    y = np.tanh(a.data)

    def backward(g):
        a._accumulate(g * (1 - y * y))

    return Tensor._from_op(y, (a,), backward, "tanh")


# -- linear algebra ------------------------------------------------------

def matmul(a, b):
    """Matrix product over the last two axes, broadcasting leading axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions of {a.shape} and {b.shape} do not agree")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul: batch dimensions of {a.shape} and {b.shape} do not broadcast") from None

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return Tensor._from_op(a.data @ b.data, (a, b), backward, "matmul")


def reshape(a, shape):
    a = as_tensor(a)
    original = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {original} as {tuple(shape)}") from None

    def backward(g):
        a._accumulate(g.reshape(original))

    return Tensor._from_op(out, (a,), backward, "reshape")


def transpose(a, axes):
    a = as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        a._accumulate(np.transpose(g, inverse))

    return Tensor._from_op(np.transpose(a.data, axes), (a,), backward, "transpose")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    ref = tensors[0].shape
    ax = axis % len(ref)
    for t in tensors[1:]:
        if len(t.shape) != len(ref) or any(t.shape[i] != ref[i] for i in range(len(ref)) if i != ax):
            raise DimensionError(f"concat: shapes {ref} and {t.shape} differ off axis {axis}")
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[ax] = slice(lo, hi)
                t._accumulate(g[tuple(index)])

    return Tensor._from_op(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward, "concat")


def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy naming
    a = as_tensor(a)
    shape = a.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, shape))

    return Tensor._from_op(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward, "sum")


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# -- neural network primitives -------------------------------------------

def softmax_rows(x, mask=None):
    """Softmax over the last axis. ``mask`` is boolean, True = keep."""
    x = as_tensor(x)
    data = x.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        try:
            mask = np.broadcast_to(mask, data.shape)
        except ValueError:
            raise DimensionError(f"softmax_rows: mask {mask.shape} does not cover scores {data.shape}") from None
        if not mask.any(axis=-1).all():
            raise DegenerateMaskError("softmax_rows: a row has every entry masked")
        data = np.where(mask, data, -np.inf)
    shifted = data - data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    if mask is not None:
        e = np.where(mask, e, 0)
    y = e / e.sum(axis=-1, keepdims=True)
    y = y.astype(x.data.dtype, copy=False)

    def backward(g):
        x._accumulate(y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return Tensor._from_op(y, (x,), backward, "softmax_rows")


def layer_norm(x, gain, bias, eps=1e-5):
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match last dim of {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.data + bias.data

    def backward(g):
        if gain.requires_grad:
            gain._accumulate(_unbroadcast(g * xhat, gain.shape))
        if bias.requires_grad:
            bias._accumulate(_unbroadcast(g, bias.shape))
        if x.requires_grad:
            gx = g * gain.data
            dx = inv * (gx - gx.mean(axis=-1, keepdims=True)
                        - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
            x._accumulate(dx)

    return Tensor._from_op(out.astype(x.data.dtype, copy=False), (x, gain, bias), backward, "layer_norm")


def log_softmax_np(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(logits, targets, ignore_id=0):
    """Mean negative log-likelihood of ``targets`` under ``logits``.

    ``logits`` of shape [T, V] gives the mean over non-ignored positions.
    With [B, T, V], each sequence is averaged over its non-ignored positions
    and the per-sequence means are averaged over the batch.
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets)
    if logits.shape[:-1] != targets.shape:
        raise DimensionError(f"cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    vocab = logits.shape[-1]
    keep = targets != ignore_id
    if ((targets >= vocab) & keep).any() or (targets < 0).any():
        raise DimensionError(f"cross_entropy: target id out of range for vocabulary of {vocab}")
    counts = keep.sum(axis=-1, keepdims=True)
    if (counts == 0).any():
        raise EmptyLossError("cross_entropy: every position is ignored")
    if logits.ndim == 2:
        weights = keep / counts
    else:
        lead = int(np.prod(targets.shape[:-1]))
        weights = keep / counts / lead
    weights = weights.astype(logits.data.dtype)
    logp = log_softmax_np(logits.data)
    safe = np.where(keep, targets, 0)
    picked = np.take_along_axis(logp, safe[..., None], axis=-1)[..., 0]
    loss = -(picked * weights).sum()

    def backward(g):
        p = np.exp(logp)
        onehot = np.zeros_like(p)
        np.put_along_axis(onehot, safe[..., None], 1.0, axis=-1)
        logits._accumulate(g * (p - onehot) * weights[..., None])

    return Tensor._from_op(np.asarray(loss, dtype=logits.data.dtype), (logits,), backward, "cross_entropy")


def embedding(table, ids):
    """Gather rows of ``table``; backward scatter-adds into the gathered rows."""
    table = as_tensor(table)
    ids = np.asarray(ids)
    if table.ndim != 2:
        raise DimensionError(f"embedding: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(f"embedding: ids out of range for table {table.shape}")

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        table._accumulate(grad)

    return Tensor._from_op(table.data[ids], (table,), backward, "embedding")


def dropout(x, rate, rng, training=True):
    """Inverted dropout; identity outside training or at rate 0."""
    x = as_tensor(x)
    if not training or rate <= 0:
        return x
    if rate >= 1:
        raise ValueError("dropout rate must be < 1")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(x.data.dtype) / x.data.dtype.type(keep)

    def backward(g):
        x._accumulate(g * mask)

    return Tensor._from_op(x.data * mask, (x,), backward, "dropout")
