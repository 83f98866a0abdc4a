"""Command-line entry point: ``m2ts <command> ...``.

Exit codes:
    0  success
    1  unexpected internal error
    2  usage error (unknown flag, bad argument)
    3  missing input file
    4  invalid configuration or tensor dimensions
    5  malformed data, AST or mini-language source
    6  unreadable or incompatible checkpoint
    7  numeric instability (non-finite loss or gradient)
    8  a verification check failed
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import checkpoint as ckpt_io
from .astgraph import adjacency, normalize, parse_mini, power
from .cache import load_split, load_splits, resolve_data_path, write_cache
from .config import load_run_config
from .corpus import BatchBuilder, load_dataset, read_records
from .errors import DataFormatError, M2TSError, TrainingDiverged
from .inference import evaluate_model, summarize
from .metrics import evaluate
from .trainer import data_limits, model_from_checkpoint, train
from .validation import check_program, split_functions, to_examples

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_MISSING, EXIT_VERIFY = 0, 1, 2, 3, 8

log = logging.getLogger("m2ts")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _config_args(p, desk=True):
    p.add_argument("-c", "--config", help="JSON run config (defaults fill anything missing)")
    if desk:
        p.add_argument("--desk-scale", action="store_true", help="d_model 64, 2 layers, 2 heads, d_ff 128")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config value (JSON-typed), repeatable")


def _resolved(args, desk=None):
    desk = getattr(args, "desk_scale", False) if desk is None else desk
    return load_run_config(args.config, args.set, desk=desk).validate()


# -- commands ----------------------------------------------------------------

def cmd_preprocess(args, out):
    cfg = _resolved(args, desk=False)
    limits = data_limits(cfg)
    mapping = {}
    for item in args.data:
        name, _, path = item.rpartition("=") if "=" in item else ("train", "", item)
        mapping[name] = str(resolve_data_path(path))
    for path in mapping.values():
        if not Path(path).exists():
            raise FileNotFoundError(f"data file not found: {path}")
    splits, report = load_dataset(mapping, limits)
    write_cache(args.output, splits, report, limits, cfg.to_dict())
    text = (f"# m2ts {__version__} ingestion report\n# config: {json.dumps(cfg.to_dict(), sort_keys=True)}\n"
            + report.to_text())
    report_path = Path(args.report or f"{args.output}.report.txt")
    report_path.write_text(text, encoding="utf-8")
    out(report.to_text().rstrip())
    out(f"wrote {args.output} and {report_path}")
    return EXIT_OK


def cmd_train(args, out):
    cfg = _resolved(args)
    splits = load_splits(cfg.data, data_limits(cfg), ("train", "valid"))
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    def on_epoch(record):
        out(f"epoch {record['epoch']:4d}  train {record['train_loss']:.4f}  valid {record['valid_loss']:.4f}")

    try:
        result = train(splits["train"], splits["valid"], cfg, on_epoch=on_epoch)
    except TrainingDiverged as exc:
        if exc.checkpoint is not None:
            ckpt_io.save(exc.checkpoint, out_dir / "diverged.ckpt")
        raise
    ckpt_io.save(result.checkpoint, out_dir / "model.ckpt")
    _write_json(out_dir / "train_report.json", {
        "tool_version": __version__, "config": cfg.to_dict(), "overrides": list(args.set),
        "desk_scale": bool(args.desk_scale), "history": result.history, "stop_reason": result.stop_reason,
        "best_epoch": result.checkpoint.epoch, "best_valid": result.checkpoint.best_valid,
        "train_examples": len(splits["train"]), "valid_examples": len(splits["valid"]),
    })
    out(f"stopped ({result.stop_reason}) after {len(result.history)} epochs; best epoch "
        f"{result.checkpoint.epoch}, valid {result.checkpoint.best_valid:.4f}")
    out(f"wrote {out_dir / 'model.ckpt'}")
    return EXIT_OK


def _read_lines(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    return [line.lower().split() for line in path.read_text(encoding="utf-8").splitlines()]


def cmd_eval(args, out):
    if args.pred or args.ref:
        if not (args.pred and args.ref):
            raise _UsageError("eval: --pred and --ref must be given together")
        preds, refs = _read_lines(args.pred), _read_lines(args.ref)
        if len(preds) != len(refs):
            raise DataFormatError(f"{len(preds)} predictions but {len(refs)} references")
        report = evaluate(list(zip(preds, refs)))
        payload = {"tool_version": __version__, "config": None, "predictions": str(args.pred),
                   "references": str(args.ref), "examples": len(preds), "metrics": report.to_dict()}
    else:
        if not args.ckpt:
            raise _UsageError("eval: give --ckpt, or --pred with --ref")
        ckpt = ckpt_io.load(args.ckpt)
        model, vocabs, cfg = model_from_checkpoint(ckpt)
        if args.beam is not None:
            cfg.decode.beam_size = args.beam
        limits = data_limits(cfg)
        if args.data:
            examples = load_split(resolve_data_path(args.data), limits, args.split)
        else:
            names = ("train", args.split) if args.split == "test" else (args.split,)
            examples = load_splits(cfg.data, limits, names)[args.split]
        if not examples:
            raise DataFormatError(f"split '{args.split}' has no usable examples")
        builder = BatchBuilder(vocabs, cfg.model.scale_count, limits)
        report, hyps = evaluate_model(model, builder, vocabs, examples, cfg.decode, greedy=args.greedy)
        if args.predictions:
            Path(args.predictions).write_text("".join(" ".join(h) + "\n" for h in hyps), encoding="utf-8")
        payload = {"tool_version": __version__, "config": cfg.to_dict(), "checkpoint": Path(args.ckpt).name,
                   "checkpoint_sha256": hashlib.sha256(Path(args.ckpt).read_bytes()).hexdigest(),
                   "split": args.split, "examples": len(examples), "greedy": bool(args.greedy),
                   "metrics": report.to_dict()}
    out(report.format())
    if args.output:
        _write_json(args.output, payload)
    return EXIT_OK


def read_programs(path):
    """Programs from a JSON-lines record file or a mini-language source file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return [check_program(record, lineno) for lineno, record in read_records(path)]
    return [check_program(chunk) for chunk in split_functions(text)]


def cmd_summarize(args, out):
    ckpt = ckpt_io.load(args.ckpt)
    model, vocabs, cfg = model_from_checkpoint(ckpt)
    if args.beam is not None:
        cfg.decode.beam_size = args.beam
    limits = data_limits(cfg)
    examples = to_examples(read_programs(args.input), None, limits)
    builder = BatchBuilder(vocabs, cfg.model.scale_count, limits)
    lines = [" ".join(s) for s in summarize(model, builder, vocabs, examples, cfg.decode, greedy=args.greedy)]
    if args.output:
        Path(args.output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    else:
        for line in lines:
            out(line)
    return EXIT_OK


def _grid(mat, fmt="{:d}"):
    cells = [[fmt.format(v) for v in row] for row in mat]
    width = max(len(c) for row in cells for c in row) if cells else 1
    head = " " * 4 + " ".join(f"{j:>{width}}" for j in range(len(mat)))
    return "\n".join([head] + [f"{i:>3} " + " ".join(c.rjust(width) for c in row) for i, row in enumerate(cells)])


def _load_ast(spec: str, record_index: int):
    path = Path(spec)
    if path.exists():
        text = path.read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            records = [r for _, r in read_records(path)] if path.suffix == ".jsonl" else [json.loads(text)]
            if not 0 <= record_index < len(records):
                raise _UsageError(f"ast: record index {record_index} out of range ({len(records)} records)")
            record = records[record_index]
            return check_program(record if "code" in record else {"code": "", "ast": record})[1]
        return parse_mini(text)
    return parse_mini(spec)


def cmd_ast(args, out):
    g = _load_ast(args.show, args.record)
    out(f"{g.n} nodes, {len(g.edges)} edges")
    for node in g.nodes:
        parent = next((p for p, c in g.edges if c == node.id), None)
        value = "" if node.value is None else f" {node.value!r}"
        out(f"  {node.id:>3} {node.type}{value}" + ("" if parent is None else f"  (parent {parent})"))
    a = adjacency(g)
    out("adjacency:")
    out(_grid(a))
    for m in args.power:
        out(f"A^{m}:")
        out(_grid(power(a, m)))
        if args.normalized:
            out(f"normalized A^{m}:")
            out(_grid(normalize(power(a, m)), "{:.3f}"))
    return EXIT_OK


def cmd_verify(args, out):
    from .verify import run_checks

    results = run_checks(full=args.full, only=args.only, out=out)
    failed = [r for r in results if not r.passed]
    out(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if args.output:
        _write_json(args.output, {"tool_version": __version__, "config": None, "results": [
            {"criterion": r.criterion, "name": r.name, "passed": r.passed, "detail": r.detail,
             "seconds": r.seconds} for r in results]})
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_ablate(args, out):
    from .ablation import ablation_matrix, expand_grid

    cfg = _resolved(args, desk=True)
    cells = expand_grid(args.scales, args.weights, [r == "on" for r in args.residual], args.fusion)
    splits = load_splits(cfg.data, data_limits(cfg), ("train", "valid", "test"))
    report = ablation_matrix(cfg, cells, splits["train"], splits["valid"], splits["test"],
                             log=lambda row: out(f"done: {row.label}"))
    out(report.to_text().rstrip())
    if args.output:
        base = Path(args.output)
        _write_json(base.with_suffix(".json"), report.to_dict())
        base.with_suffix(".txt").write_text(f"# m2ts {__version__}\n# config: "
                                            f"{json.dumps(cfg.to_dict(), sort_keys=True)}\n" + report.to_text(),
                                            encoding="utf-8")
    return EXIT_OK


def cmd_config(args, out):
    out(json.dumps(_resolved(args).to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="m2ts", description="Multi-scale AST + code summarizer.",
                     epilog="Exit codes: 0 ok, 1 internal, 2 usage, 3 missing file, 4 config, "
                            "5 data, 6 checkpoint, 7 numeric, 8 verification failed.")
    parser.add_argument("--version", action="version", version=f"m2ts {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="validate a dataset and write a corpus cache")
    p.add_argument("data", nargs="+", help="JSON-lines file(s), optionally as SPLIT=PATH")
    p.add_argument("-o", "--output", required=True, help="cache file to write")
    p.add_argument("--report", help="ingestion report path (default: <cache>.report.txt)")
    _config_args(p, desk=False)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a model and write <dir>/model.ckpt")
    _config_args(p)
    p.add_argument("-o", "--output", required=True, help="checkpoint directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a split, or predictions against references")
    p.add_argument("--ckpt", help="checkpoint file")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))
    p.add_argument("--data", help="data file overriding the checkpoint's configured path")
    p.add_argument("--pred", help="predictions file, one tokenized summary per line")
    p.add_argument("--ref", help="references file aligned with --pred")
    p.add_argument("--beam", type=int, help="beam width (default from config: 5)")
    p.add_argument("--greedy", action="store_true", help="greedy decoding instead of beam search")
    p.add_argument("--predictions", help="also write generated summaries here")
    p.add_argument("-o", "--output", help="JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("summarize", help="generate one summary per input program")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True, help="JSON-lines records or mini-language source")
    p.add_argument("--beam", type=int, help="beam width (default from config: 5)")
    p.add_argument("--greedy", action="store_true")
    p.add_argument("-o", "--output", help="write summaries here instead of stdout")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("ast", help="print an AST with its adjacency and power matrices")
    p.add_argument("--show", required=True, metavar="SOURCE|RECORD",
                   help="mini-language file or text, a JSON AST/record file, or a .jsonl dataset")
    p.add_argument("--record", type=int, default=0, help="record index within a .jsonl file")
    p.add_argument("--power", type=int, action="append", default=[], metavar="M",
                   help="also print A^M (repeatable, 1..5)")
    p.add_argument("--normalized", action="store_true", help="print normalized matrices too")
    p.set_defaults(func=cmd_ast)

    p = sub.add_parser("verify", help="run gradient, oracle and determinism checks")
    p.add_argument("--full", action="store_true", help="include the overfit and ablation runs")
    p.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these criteria")
    p.add_argument("-o", "--output", help="JSON report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ablate", help="train and score a grid of structural variants (desk scale)")
    _config_args(p, desk=False)
    p.add_argument("--scales", type=int, nargs="+", default=[1, 3])
    p.add_argument("--weights", nargs="+", default=["paper"], choices=("paper", "uniform"))
    p.add_argument("--residual", nargs="+", default=["on"], choices=("on", "off"))
    p.add_argument("--fusion", nargs="+", default=["acf"], choices=("acf", "attention"))
    p.add_argument("-o", "--output", help="report path stem (.json and .txt are written)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("config", help="print the fully resolved config")
    _config_args(p)
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None, quiet=False) -> int:
    out = (lambda *_: None) if quiet else print

    def err(msg):
        print(f"m2ts: error: {msg}", file=sys.stderr)

    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        err(exc)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except _UsageError as exc:
        err(exc)
        return EXIT_USAGE
    except M2TSError as exc:
        err(exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        err(exc)
        return EXIT_MISSING
    except KeyboardInterrupt:
        err("interrupted")
        return 130
    except Exception as exc:  # unexpected: keep the traceback for bug reports
        log.debug("unhandled error", exc_info=True)
        err(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
