"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericInstabilityError
from .rng import Rng
from .tensor import Tensor


@dataclass
class GradCheckEntry:
    param: str
    index: tuple
    analytic: float
    numeric: float
    error: float


@dataclass
class GradCheckReport:
    tol: float
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.error <= self.tol for e in self.entries)

    @property
    def failures(self):
        return [e for e in self.entries if e.error > self.tol]

    @property
    def failed_params(self):
        return sorted({e.param for e in self.failures})

    def worst(self, k=5):
        return sorted(self.entries, key=lambda e: -e.error)[:k]

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = self.worst(1)
        tail = f", worst {worst[0].error:.2e} at {worst[0].param}{list(worst[0].index)}" if worst else ""
        return f"{status}: {len(self.entries)} coordinates checked{tail}"


def _provenance(t: Tensor):
    """Name the earliest op in the graph whose output is non-finite."""
    seen, stack, bad = set(), [t], []
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if not np.all(np.isfinite(node.data)):
            bad.append(node)
        stack.extend(node._parents)
    if not bad:
        return t.op
    return bad[-1].op


def _evaluate(f):
    out = f()
    value = float(np.asarray(out.data).reshape(()))
    if not np.isfinite(value):
        raise NumericInstabilityError(f"grad_check: non-finite value produced by op '{_provenance(out)}'")
    return out, value


def grad_check(f, params, tol=1e-4, samples=None, eps=1e-6, seed=0) -> GradCheckReport:
    """Compare ``backward()`` gradients of scalar ``f()`` to central differences.

    ``params`` maps names to leaf tensors (or is a list of tensors). The error
    per coordinate is ``|analytic - numeric| / max(1, |numeric|)``. When
    ``samples`` is given, that many coordinates are drawn uniformly over all
    parameter entries; otherwise every coordinate is checked.
    """
    if not isinstance(params, dict):
        params = {(p.name or f"param{i}"): p for i, p in enumerate(params)}
    for name, p in params.items():
        if p.data.dtype != np.float64:
            raise ValueError(f"grad_check needs 64-bit tensors; '{name}' is {p.data.dtype}")
        p.zero_grad()

    out, _ = _evaluate(f)
    out.backward()
    analytic = {name: np.array(p.grad, copy=True) for name, p in params.items()}
    for p in params.values():
        p.zero_grad()

    coords = [(name, idx) for name, p in params.items() for idx in np.ndindex(p.shape)]
    if samples is not None and samples < len(coords):
        pick = Rng(seed).choice(len(coords), samples, replace=False)
        coords = [coords[i] for i in sorted(pick)]

    report = GradCheckReport(tol=tol)
    for name, idx in coords:
        p = params[name]
        original = p.data.copy()
        bumped = original.copy()
        bumped[idx] = original[idx] + eps
        p.assign(bumped)
        _, plus = _evaluate(f)
        bumped[idx] = original[idx] - eps
        p.assign(bumped)
        _, minus = _evaluate(f)
        p.assign(original)
        numeric = (plus - minus) / (2 * eps)
        a = float(analytic[name][idx])
        err = abs(a - numeric) / max(1.0, abs(numeric))
        report.entries.append(GradCheckEntry(name, tuple(int(i) for i in idx), a, numeric, err))
    return report
