"""Input checking for the estimator API and the ``summarize`` command.

A program may be given as a mini-language source string, a dataset record
(``{"code": ..., "ast": {...}}``), or a ``(code, ast)`` pair where ``ast``
is an :class:`AstGraph` or an AST record.
"""
from __future__ import annotations

import re
from collections.abc import Mapping, Sequence

from .astgraph import AstGraph, parse_mini
from .corpus import DataLimits, Example, tokenize_code, tokenize_summary
from .errors import DataFormatError, InputTypeError, MiniSyntaxError, StructureError

_FUNC_START = re.compile(r"(?m)^[ \t]*func\b")


def split_functions(source: str) -> list:
    """Cut a mini-language file into one chunk per top-level ``func``."""
    starts = [m.start() for m in _FUNC_START.finditer(source)]
    if not starts:
        return [source] if source.strip() else []
    head = source[:starts[0]].strip()
    if head and not all(line.strip().startswith("//") for line in head.splitlines() if line.strip()):
        raise MiniSyntaxError("text before the first 'func'", 1, 1)
    return [source[a:b].strip() for a, b in zip(starts, starts[1:] + [len(source)])]


def check_program(item, index=None):
    """Normalize one program to ``(code, AstGraph)``."""
    where = "" if index is None else f" at index {index}"
    if isinstance(item, str):
        return item, parse_mini(item)
    if isinstance(item, Mapping):
        if "code" not in item or "ast" not in item:
            raise DataFormatError(f"program record{where} needs 'code' and 'ast' fields")
        code, ast = item["code"], item["ast"]
    elif isinstance(item, Sequence) and len(item) == 2:
        code, ast = item
    else:
        raise InputTypeError(f"program{where} must be a source string, a record, or a (code, ast) pair; "
                             f"got {type(item).__name__}")
    if not isinstance(code, str):
        raise InputTypeError(f"code{where} must be a string")
    graph = ast if isinstance(ast, AstGraph) else AstGraph.from_record(ast)
    try:
        graph.validate(min_nodes=1)
    except StructureError as exc:
        raise DataFormatError(f"AST{where}: {exc}") from None
    return code, graph


def check_programs(X) -> list:
    if isinstance(X, (str, Mapping)):
        raise InputTypeError("expected a sequence of programs, got a single program")
    items = list(X)
    if not items:
        raise DataFormatError("expected at least one program")
    return [check_program(item, i) for i, item in enumerate(items)]


def check_summaries(y, n=None) -> list:
    """Token lists for summaries given as strings or token sequences."""
    if isinstance(y, str):
        raise InputTypeError("expected a sequence of summaries, got a single string")
    out = []
    for i, s in enumerate(y):
        if isinstance(s, str):
            out.append(tokenize_summary(s))
        elif isinstance(s, Sequence) and all(isinstance(t, str) for t in s):
            out.append([t.lower() for t in s])
        else:
            raise InputTypeError(f"summary at index {i} must be a string or a list of tokens")
    if n is not None and len(out) != n:
        raise DataFormatError(f"got {n} programs but {len(out)} summaries")
    return out


def to_examples(programs, summaries=None, limits: DataLimits = None, filter_training=False):
    """Build Examples; with ``filter_training`` return ``(kept, rejected_indices)``."""
    limits = limits or DataLimits()
    kept, rejected = [], []
    for i, (code, graph) in enumerate(programs):
        tokens = tokenize_code(code)[: limits.max_code_len]
        summary = [] if summaries is None else summaries[i][: limits.max_summary_len]
        if filter_training:
            words = [t for t in summary if any(ch.isalnum() for ch in t)]
            if graph.n < limits.min_ast_nodes or not tokens or len(words) < limits.min_summary_words:
                rejected.append(i)
                continue
        if not tokens:
            raise DataFormatError(f"program at index {i} has no code tokens")
        kept.append(Example(tokens, graph, summary, str(i)))
    return (kept, rejected) if filter_training else kept
