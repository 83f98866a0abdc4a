"""Dataset ingestion, subtokenization, vocabularies and padded batches."""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .astgraph import AstGraph, build_scales
from .errors import DataFormatError, StructureError

PAD, UNK, BOS, EOS = 0, 1, 2, 3
SPECIALS = ("<PAD>", "<UNK>", "<BOS>", "<EOS>")

_SUBTOKEN = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")
_CODE_TOKEN = re.compile(r"""[A-Za-z_$][A-Za-z_$0-9]*|\d+(?:\.\d+)?|"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*'|==|!=|<=|>=|&&|\|\||\S""")
_NL_TOKEN = re.compile(r"\w+|[^\w\s]")


def split_subtokens(identifier: str) -> list:
    """Split camelCase / snake_case / digit runs into lowercase pieces.

    >>> split_subtokens("HTTPServer2x")
    ['http', 'server', '2', 'x']
    """
    pieces = [m.group().lower() for m in _SUBTOKEN.finditer(identifier)]
    return pieces or [identifier.lower()]


def tokenize_code(code: str) -> list:
    tokens = []
    for tok in _CODE_TOKEN.findall(code):
        if tok[0].isalpha() or tok[0] in "_$":
            tokens.extend(split_subtokens(tok))
        else:
            tokens.append(tok)
    return tokens


def tokenize_summary(text: str) -> list:
    return _NL_TOKEN.findall(text.lower())


class Vocab:
    """Token <-> id map with PAD=0, UNK=1, BOS=2, EOS=3."""

    def __init__(self, tokens: Sequence[str] = (), max_size: int = 50000):
        self.max_size = max_size
        self.token_of = list(SPECIALS)
        self.id_of = {t: i for i, t in enumerate(SPECIALS)}
        for tok in tokens:
            if tok not in self.id_of:
                self.id_of[tok] = len(self.token_of)
                self.token_of.append(tok)

    def __len__(self):
        return len(self.token_of)

    def __contains__(self, token):
        return token in self.id_of

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.token_of == other.token_of

    def encode(self, tokens):
        return [self.id_of.get(t, UNK) for t in tokens]

    def decode(self, ids, strip=True):
        out = []
        for i in ids:
            i = int(i)
            if strip and i in (PAD, BOS):
                continue
            if strip and i == EOS:
                break
            out.append(self.token_of[i] if 0 <= i < len(self.token_of) else SPECIALS[UNK])
        return out

    def to_list(self):
        return self.token_of[len(SPECIALS):]

    @classmethod
    def from_list(cls, tokens, max_size=50000):
        return cls(tokens, max_size=max_size)


def build_vocab(streams, max_size: int = 50000) -> Vocab:
    """Frequency-ranked vocabulary; ties go to the lexicographically smaller token."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts = Counter()
    for stream in streams:
        counts.update(t for t in stream if t not in SPECIALS)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    return Vocab([t for t, _ in ranked], max_size=max_size)


def encode_pad(tokens, vocab: Vocab, max_len: int, add_bos_eos: bool = False):
    """Fixed-length ids plus a boolean mask that is True on real tokens."""
    ids = vocab.encode(tokens)
    if add_bos_eos:
        if max_len < 2:
            raise ValueError("max_len must be >= 2 when framing with BOS/EOS")
        ids = [BOS] + ids[: max_len - 2] + [EOS]
    else:
        ids = ids[:max_len]
    n = len(ids)
    ids = ids + [PAD] * (max_len - n)
    mask = [True] * n + [False] * (max_len - n)
    return np.array(ids, dtype=np.int64), np.array(mask, dtype=bool)


@dataclass
class Example:
    code_tokens: list
    ast: AstGraph
    summary_tokens: list
    source_id: str = ""

    @property
    def key(self):
        return (" ".join(self.code_tokens), " ".join(self.summary_tokens))


@dataclass
class DataLimits:
    max_code_len: int = 200
    max_summary_len: int = 30
    min_ast_nodes: int = 2
    min_summary_words: int = 2
    max_ast_nodes: Optional[int] = None


@dataclass
class IngestReport:
    splits: dict = field(default_factory=dict)

    def split(self, name):
        return self.splits.setdefault(name, {"read": 0, "kept": 0, "rejected": Counter()})

    def reject(self, split, reason):
        self.split(split)["rejected"][reason] += 1

    def to_dict(self):
        return {name: {"read": s["read"], "kept": s["kept"], "rejected": dict(sorted(s["rejected"].items()))}
                for name, s in self.splits.items()}

    def to_text(self) -> str:
        lines = []
        for name, s in self.to_dict().items():
            lines.append(f"[{name}] read={s['read']} kept={s['kept']}")
            for reason, n in s["rejected"].items():
                lines.append(f"  rejected {reason}: {n}")
        return "\n".join(lines) + "\n"


def _words(tokens):
    return [t for t in tokens if any(ch.isalnum() for ch in t)]


def record_to_example(record: dict, limits: DataLimits, line=None):
    """Build an Example, or return a rejection reason string."""
    try:
        source_id = str(record["id"])
        code = record["code"]
        summary = record.get("summary", "") or ""
        ast_obj = record["ast"]
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"record is missing field {exc}", line) from None
    if not isinstance(code, str) or not isinstance(summary, str):
        raise DataFormatError("'code' and 'summary' must be strings", line)
    try:
        graph = AstGraph.from_record(ast_obj)
    except StructureError as exc:
        raise DataFormatError(str(exc), line) from None
    if graph.n < limits.min_ast_nodes:
        return "ast_too_small"
    if limits.max_ast_nodes is not None and graph.n > limits.max_ast_nodes:
        return "ast_too_large"
    try:
        graph.validate(min_nodes=limits.min_ast_nodes)
    except StructureError as exc:
        raise DataFormatError(str(exc), line) from None
    summary_tokens = tokenize_summary(summary)
    if len(_words(summary_tokens)) < limits.min_summary_words:
        return "summary_too_short"
    code_tokens = tokenize_code(code)
    if not code_tokens:
        return "code_empty"
    return Example(code_tokens[: limits.max_code_len], graph,
                   summary_tokens[: limits.max_summary_len], source_id)


def read_records(path):
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: invalid JSON ({exc.msg})", lineno) from None
            if not isinstance(record, dict):
                raise DataFormatError(f"{path}: record is not an object", lineno)
            yield lineno, record


def load_dataset(path, limits: Optional[DataLimits] = None, split: str = "train"):
    """Load one JSON-lines file, or a ``{split: path}`` mapping of files.

    For a mapping, records of non-train splits whose (code, summary) key also
    occurs in the train split are dropped with reason ``duplicate_of_train``.
    Returns ``(examples, report)``; examples is a dict when a mapping is given.
    """
    limits = limits or DataLimits()
    report = IngestReport()
    if isinstance(path, Mapping):
        out = {}
        for name, p in path.items():
            out[name] = _load_split(p, limits, name, report)
        if "train" in out:
            seen = {ex.key for ex in out["train"]}
            for name in out:
                if name in ("train", "valid"):
                    continue
                kept = []
                for ex in out[name]:
                    if ex.key in seen:
                        report.reject(name, "duplicate_of_train")
                        report.split(name)["kept"] -= 1
                    else:
                        kept.append(ex)
                out[name] = kept
        return out, report
    return _load_split(path, limits, split, report), report


def _load_split(path, limits, name, report):
    examples = []
    stats = report.split(name)
    for lineno, record in read_records(path):
        stats["read"] += 1
        result = record_to_example(record, limits, lineno)
        if isinstance(result, str):
            report.reject(name, result)
            continue
        stats["kept"] += 1
        examples.append(result)
    return examples


# -- batching --------------------------------------------------------------

@dataclass
class Vocabs:
    code: Vocab
    nl: Vocab
    node: Vocab

    @classmethod
    def build(cls, examples, max_size=50000):
        return cls(build_vocab((ex.code_tokens for ex in examples), max_size),
                   build_vocab((ex.summary_tokens for ex in examples), max_size),
                   build_vocab((ex.ast.features for ex in examples), max_size))

    def to_dict(self):
        return {"code": self.code.to_list(), "nl": self.nl.to_list(), "node": self.node.to_list(),
                "max_size": self.code.max_size}

    @classmethod
    def from_dict(cls, d):
        size = d.get("max_size", 50000)
        return cls(Vocab(d["code"], size), Vocab(d["nl"], size), Vocab(d["node"], size))


@dataclass
class Batch:
    code_ids: np.ndarray        # [B, Lc]
    code_mask: np.ndarray       # [B, Lc]
    graphs: list
    node_ids: np.ndarray        # [B, N]
    node_mask: np.ndarray       # [B, N]
    node_features: list
    scales: list                # scale_count arrays of [B, N, N]
    nl_in: np.ndarray           # [B, Ls]
    nl_out: np.ndarray          # [B, Ls]
    nl_mask: np.ndarray         # [B, Ls]

    @property
    def size(self):
        return self.code_ids.shape[0]


class BatchBuilder:
    """Pads examples into :class:`Batch` objects, caching each AST's scale stack."""

    def __init__(self, vocabs: Vocabs, scale_count: int, limits: Optional[DataLimits] = None):
        self.vocabs = vocabs
        self.scale_count = scale_count
        self.limits = limits or DataLimits()
        self._scales = {}

    def scales_for(self, graph: AstGraph):
        key = id(graph)
        hit = self._scales.get(key)
        if hit is None or hit[0] is not graph:
            hit = (graph, build_scales(graph, self.scale_count))
            self._scales[key] = hit
        return hit[1]

    def build(self, examples, with_targets=True) -> Batch:
        if not examples:
            raise ValueError("cannot build an empty batch")
        lc = max(len(ex.code_tokens) for ex in examples)
        lc = min(lc, self.limits.max_code_len)
        code = [encode_pad(ex.code_tokens, self.vocabs.code, lc) for ex in examples]
        code_ids = np.stack([c[0] for c in code])
        code_mask = np.stack([c[1] for c in code])

        n_max = max(ex.ast.n for ex in examples)
        b = len(examples)
        node_ids = np.zeros((b, n_max), dtype=np.int64)
        node_mask = np.zeros((b, n_max), dtype=bool)
        scales = [np.zeros((b, n_max, n_max)) for _ in range(self.scale_count)]
        for i, ex in enumerate(examples):
            n = ex.ast.n
            node_ids[i, :n] = self.vocabs.node.encode(ex.ast.features)
            node_mask[i, :n] = True
            for k, mat in enumerate(self.scales_for(ex.ast)):
                scales[k][i, :n, :n] = mat

        if with_targets:
            ls = min(max(len(ex.summary_tokens) for ex in examples), self.limits.max_summary_len) + 2
            framed = np.stack([encode_pad(ex.summary_tokens, self.vocabs.nl, ls, True)[0] for ex in examples])
            nl_in, nl_out = framed[:, :-1].copy(), framed[:, 1:].copy()
            nl_in[nl_in == EOS] = PAD
        else:
            nl_in = np.full((b, 1), BOS, dtype=np.int64)
            nl_out = np.full((b, 1), PAD, dtype=np.int64)
        return Batch(code_ids, code_mask, [ex.ast for ex in examples], node_ids, node_mask,
                     [ex.ast.features for ex in examples], scales, nl_in, nl_out, nl_in != PAD)

    def batches(self, examples, batch_size, order=None):
        order = range(len(examples)) if order is None else order
        order = list(order)
        for start in range(0, len(order), batch_size):
            yield self.build([examples[i] for i in order[start:start + batch_size]])
