"""Seeded, splittable random streams on top of numpy's counter-based Philox."""
from __future__ import annotations

import hashlib

import numpy as np


def _stable_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


class Rng:
    """A Philox stream identified by a 64-bit seed and an optional label path.

    ``split(label)`` derives an independent child stream whose draws depend only
    on the parent seed and the label, never on how much the parent was used.
    """

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(path)
        key = [self.seed] + [_stable_key(p) for p in self.path]
        self._gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))

    def split(self, label) -> "Rng":
        return Rng(self.seed, self.path + (str(label),))

    def random(self, shape=None):
        return self._gen.random(shape)

    def uniform(self, low, high, shape):
        return self._gen.uniform(low, high, shape)

    def normal(self, shape, scale=1.0):
        return self._gen.normal(0.0, scale, shape)

    def integers(self, low, high=None, shape=None):
        return self._gen.integers(low, high, shape)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, n, size, replace=False):
        return self._gen.choice(n, size=size, replace=replace)

    # state round trip for checkpoints
    def get_state(self) -> dict:
        return {"seed": self.seed, "path": list(self.path),
                "bit_generator": _jsonable(self._gen.bit_generator.state)}

    @classmethod
    def from_state(cls, state: dict) -> "Rng":
        rng = cls(state["seed"], tuple(state["path"]))
        rng._gen.bit_generator.state = _restore(state["bit_generator"])
        return rng


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__array__": [int(v) for v in obj.tolist()], "dtype": str(obj.dtype)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _restore(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _restore(v) for k, v in obj.items()}
    return obj
