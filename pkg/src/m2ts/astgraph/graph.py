"""AST graphs, adjacency matrices, walk-count powers and symmetric normalization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigError, StructureError

MAX_SCALES = 5
FEATURE_SEP = "␟"  # SYMBOL FOR UNIT SEPARATOR, joins node type and value


@dataclass(frozen=True)
class AstNode:
    id: int
    type: str
    value: Optional[str] = None

    @property
    def feature(self) -> str:
        if self.value is None:
            return self.type
        return f"{self.type}{FEATURE_SEP}{self.value}"


@dataclass
class AstGraph:
    nodes: list
    edges: list = field(default_factory=list)

    def __post_init__(self):
        self.nodes = [n if isinstance(n, AstNode) else AstNode(*n) for n in self.nodes]
        self.edges = [(int(p), int(c)) for p, c in self.edges]

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def features(self):
        return [node.feature for node in self.nodes]

    def validate(self, min_nodes=2):
        """Check ids are 0..n-1 and the edges form a tree rooted at node 0."""
        n = self.n
        if n < min_nodes:
            raise StructureError(f"AST has {n} node(s); at least {min_nodes} required")
        if [node.id for node in self.nodes] != list(range(n)):
            raise StructureError("AST node ids must be 0..n-1 in order")
        for p, c in self.edges:
            if not (0 <= p < n and 0 <= c < n):
                raise StructureError(f"edge ({p}, {c}) references an unknown node id")
        if len(self.edges) != n - 1:
            raise StructureError(f"a tree on {n} nodes needs {n - 1} edges, got {len(self.edges)}")
        parent = {}
        for p, c in self.edges:
            if c == 0 or c in parent:
                raise StructureError(f"node {c} has more than one parent or is the root")
            parent[c] = p
        for start in range(1, n):
            node, steps = start, 0
            while node != 0:
                node = parent[node]
                steps += 1
                if steps > n:
                    raise StructureError("AST edges contain a cycle")
        return self

    def children(self):
        out = {i: [] for i in range(self.n)}
        for p, c in self.edges:
            out[p].append(c)
        return out

    def to_record(self) -> dict:
        return {"nodes": [{"id": nd.id, "type": nd.type, "value": nd.value} for nd in self.nodes],
                "edges": [[p, c] for p, c in self.edges]}

    @classmethod
    def from_record(cls, record: dict) -> "AstGraph":
        try:
            nodes = [AstNode(int(nd["id"]), str(nd["type"]),
                             None if nd.get("value") is None else str(nd["value"]))
                     for nd in record["nodes"]]
            edges = [(int(p), int(c)) for p, c in record["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed AST object: {exc}") from None
        return cls(nodes, edges)

    def permuted(self, order):
        """Relabel so that new node ``i`` is old node ``order[i]``; root stays first."""
        new_of = {old: new for new, old in enumerate(order)}
        nodes = [AstNode(i, self.nodes[old].type, self.nodes[old].value) for i, old in enumerate(order)]
        edges = [(new_of[p], new_of[c]) for p, c in self.edges]
        return AstGraph(nodes, edges)


def adjacency(g: AstGraph) -> np.ndarray:
    """Symmetric 0/1 integer adjacency with zero diagonal."""
    n = g.n
    a = np.zeros((n, n), dtype=np.int64)
    for p, c in g.edges:
        if not (0 <= p < n and 0 <= c < n):
            raise StructureError(f"edge ({p}, {c}) references an unknown node id")
        a[p, c] = 1
        a[c, p] = 1
    return a


def power(a: np.ndarray, m: int) -> np.ndarray:
    """Exact integer matrix power; entry (i, j) counts length-``m`` walks."""
    if not 1 <= m <= MAX_SCALES:
        raise ConfigError(f"power: exponent {m} outside the configured range [1, {MAX_SCALES}]")
    a = np.asarray(a, dtype=np.int64)
    out = a.copy()
    for _ in range(m - 1):
        out = out @ a
    return out


def normalize(a: np.ndarray) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I."""
    a = np.asarray(a, dtype=np.float64)
    tilde = a + np.eye(a.shape[0])
    deg = tilde.sum(axis=1)
    # one rounding per entry, and d_i * d_j == d_j * d_i keeps the result exactly symmetric
    return tilde / np.sqrt(np.outer(deg, deg))


def build_scales(g: AstGraph, scale_count: int) -> list:
    """Normalized walk-count matrices for A, A^2, ..., A^scale_count."""
    if not 1 <= scale_count <= MAX_SCALES:
        raise ConfigError(f"scale_count must be in [1, {MAX_SCALES}], got {scale_count}")
    a = adjacency(g)
    return [normalize(power(a, m)) for m in range(1, scale_count + 1)]
