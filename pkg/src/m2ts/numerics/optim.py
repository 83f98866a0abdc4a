from __future__ import annotations

import numpy as np

from ..errors import NumericInstabilityError


def global_grad_norm(params):
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(np.square(p.grad, dtype=np.float64)))
    return float(np.sqrt(total))


class SGD:
    """Plain stochastic gradient descent, optional momentum and norm clipping.

    A step refuses to touch any parameter if a gradient is non-finite.
    """

    def __init__(self, params, lr=1e-4, momentum=0.0, clip_norm=None):
        self.params = [p for p in params if p.requires_grad]
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.clip_norm = clip_norm
        self._velocity = [None] * len(self.params)

    def step(self):
        for p in self.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise NumericInstabilityError(
                    f"sgd_step: non-finite gradient in '{p.name or 'unnamed'}'; update aborted")
        factor = 1.0
        if self.clip_norm is not None:
            norm = global_grad_norm(self.params)
            if norm > self.clip_norm:
                factor = self.clip_norm / norm
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad * factor if factor != 1.0 else p.grad
            if self.momentum:
                v = g if self._velocity[i] is None else self.momentum * self._velocity[i] + g
                self._velocity[i] = v
                g = v
            p.assign(p.data - p.data.dtype.type(self.lr) * g)
        self.zero_grad()

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_dict(self):
        return {"lr": self.lr, "momentum": self.momentum, "clip_norm": self.clip_norm}


def sgd_step(params, lr):
    """One update ``w <- w - lr * grad`` followed by zeroing the gradients."""
    SGD(params, lr=lr).step()
