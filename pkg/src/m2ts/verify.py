"""Self-checks behind the ``verify`` command, one function per acceptance criterion.

Each check returns a :class:`CheckResult`; none of them raise on a failed
comparison. ``run_checks`` prints one PASS/FAIL line per check.
"""
from __future__ import annotations

import copy
import itertools
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import numerics as nx
from . import oracles
from .astgraph import AstGraph, AstNode, adjacency, normalize, power
from .config import RunConfig, desk_scale
from .corpus import BOS, EOS, BatchBuilder, DataLimits, Vocabs, load_dataset
from .data.toy import toy_corpus_path
from .metrics import bleu, cider, cider_scores, lcs, meteor, rouge_l, rouge_l_pair
from .model import M2TSModel, MultiScaleGCN, beam_decode, beam_search, gcn_layer, greedy_decode
from .numerics import Rng, Tensor


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.criterion:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(criterion, name, fn, *args, **kwargs) -> CheckResult:
    started = time.perf_counter()
    passed, detail, data = fn(*args, **kwargs)
    return CheckResult(criterion, name, bool(passed), detail, time.perf_counter() - started, data)


def toy_examples():
    examples, _ = load_dataset(toy_corpus_path(), DataLimits())
    return examples


def tree_graph(parents) -> AstGraph:
    nodes = [AstNode(i, "N", None) for i in range(len(parents))]
    return AstGraph(nodes, [(p, c) for c, p in enumerate(parents) if p >= 0])


def random_parents(rng: Rng, n: int) -> list:
    return [-1] + [int(rng.integers(0, i)) for i in range(1, n)]


# -- 1: gradients ------------------------------------------------------------

def _leaf(rng, label, shape, offset=0.0):
    data = rng.split(label).normal(shape)
    if offset:
        data = data + np.sign(data) * offset  # keep relu inputs away from the kink
    return Tensor(data, requires_grad=True, name=label)


def op_cases(rng: Rng) -> list:
    """``(op name, f, params)`` triples; each f returns a scalar tensor."""
    def weighted(out, label):
        w = Tensor(rng.split("w_" + label).normal(out.shape))
        return nx.tsum(nx.mul(out, w))

    a, b, v = _leaf(rng, "a", (3, 4)), _leaf(rng, "b", (3, 4)), _leaf(rng, "v", (4,))
    r = _leaf(rng, "r", (3, 4), offset=0.05)
    x3, y3 = _leaf(rng, "x3", (2, 3, 4)), _leaf(rng, "y3", (2, 4, 5))
    m = np.array([[True, True, False, True], [True, False, False, False], [True, True, True, True]])
    gain, bias = _leaf(rng, "gain", (4,)), _leaf(rng, "bias", (4,))
    logits2, logits3 = _leaf(rng, "logits2", (5, 6)), _leaf(rng, "logits3", (2, 4, 6))
    table = _leaf(rng, "table", (6, 3))
    return [
        ("add", lambda: weighted(nx.add(a, v), "add"), [a, v]),
        ("sub", lambda: weighted(nx.sub(a, b), "sub"), [a, b]),
        ("mul", lambda: weighted(nx.mul(a, v), "mul"), [a, v]),
        ("scale", lambda: weighted(nx.scale(a, -1.7), "scale"), [a]),
        ("relu", lambda: weighted(nx.relu(r), "relu"), [r]),
        ("tanh", lambda: weighted(nx.tanh(a), "tanh"), [a]),
        ("matmul", lambda: weighted(nx.matmul(x3, y3), "matmul"), [x3, y3]),
        ("matmul_broadcast", lambda: weighted(nx.matmul(x3, nx.transpose(a, (1, 0))), "mmb"), [x3, a]),
        ("reshape", lambda: weighted(nx.reshape(x3, (6, 4)), "reshape"), [x3]),
        ("transpose", lambda: weighted(nx.transpose(x3, (2, 0, 1)), "transpose"), [x3]),
        ("concat", lambda: weighted(nx.concat([a, b], axis=0), "concat"), [a, b]),
        ("sum", lambda: weighted(nx.tsum(x3, axis=1), "sum"), [x3]),
        ("mean", lambda: weighted(nx.mean(x3, axis=(0, 2)), "mean"), [x3]),
        ("softmax_rows", lambda: weighted(nx.softmax_rows(a, m), "softmax"), [a]),
        ("layer_norm", lambda: weighted(nx.layer_norm(a, gain, bias), "ln"), [a, gain, bias]),
        ("cross_entropy_2d", lambda: nx.cross_entropy(logits2, np.array([1, 0, 5, 2, 2])), [logits2]),
        ("cross_entropy_3d", lambda: nx.cross_entropy(logits3, np.array([[4, 2, 0, 0], [1, 1, 3, 5]])),
         [logits3]),
        ("embedding", lambda: weighted(nx.embedding(table, np.array([[1, 4, 1], [0, 5, 4]])), "emb"), [table]),
        ("dropout", lambda: weighted(nx.dropout(a, 0.4, Rng(7), True), "dropout"), [a]),
    ]


def tiny_config(**model) -> RunConfig:
    cfg = RunConfig()
    cfg.model.d_model, cfg.model.layers, cfg.model.heads, cfg.model.d_ff = 16, 1, 1, 32
    cfg.model.d_k, cfg.model.fusion_d_k, cfg.model.dropout = None, 8, 0.0
    cfg.model.scale_count = 3
    for key, value in model.items():
        setattr(cfg.model, key, value)
    return cfg.validate()


def _model_grad_check(cfg, examples, per_param, tol, seed):
    vocabs = Vocabs.build(examples)
    model = M2TSModel(cfg.model, len(vocabs.code), len(vocabs.nl), len(vocabs.node), seed=seed).train()
    batch = BatchBuilder(vocabs, cfg.model.scale_count).build(examples)
    entries, failed = 0, []
    for i, (name, p) in enumerate(model.named_parameters()):
        report = nx.grad_check(lambda: model.loss(batch), {name: p}, tol=tol, samples=per_param, seed=seed + i)
        entries += len(report.entries)
        failed += report.failures
    return entries, failed


def check_gradients(tol=1e-4, per_param=4, seed=0):
    with nx.precision(64):
        rng = Rng(seed).split("gradcheck")
        coords, failures, names = 0, [], []
        for name, f, params in op_cases(rng):
            report = nx.grad_check(f, {p.name: p for p in params}, tol=tol)
            coords += len(report.entries)
            names.append(name)
            failures += [(name, e) for e in report.failures]
        examples = toy_examples()[:3]
        e2e = 0
        for cfg in (tiny_config(), tiny_config(fusion="attention", trainable_scale_weights=True,
                                               init_mode="hashed", residual=False)):
            n, bad = _model_grad_check(cfg, examples, per_param, tol, seed)
            e2e += n
            failures += [("model", e) for e in bad]
    coords += e2e
    ok = not failures and e2e >= 200
    worst = max((e.error for _, e in failures), default=0.0)
    detail = (f"{len(names)} ops + end-to-end loss, {coords} coordinates ({e2e} end-to-end), "
              f"{len(failures)} over tol {tol:g}" + (f", worst {worst:.2e}" if failures else ""))
    return ok, detail, {"coordinates": coords, "model_coordinates": e2e,
                        "failures": [(n, e.param, e.index, e.error) for n, e in failures]}


# -- 2: walk counts ----------------------------------------------------------

EXAMPLE_EDGES = [(0, 1), (1, 2), (0, 3), (3, 4), (4, 5), (4, 6), (3, 7), (7, 8), (8, 9)]


def example_graph() -> AstGraph:
    return AstGraph([AstNode(i, "N", None) for i in range(10)], list(EXAMPLE_EDGES))


def check_power_oracle(max_nodes=12, max_power=3):
    trees = mismatches = 0
    for n in range(1, max_nodes + 1):
        for parents in oracles.rooted_trees(n):
            trees += 1
            if n == 1:
                continue
            g = tree_graph(parents)
            a = adjacency(g)
            for m in range(1, max_power + 1):
                if not np.array_equal(power(a, m), oracles.walk_counts(n, g.edges, m)):
                    mismatches += 1
    a2 = power(adjacency(example_graph()), 2)
    support = sorted(int(j) for j in np.nonzero(a2[3])[0])
    example_ok = a2[3, 5] == 1 and support == [1, 3, 5, 6, 8]
    ok = mismatches == 0 and example_ok
    detail = (f"{trees} rooted tree shapes up to {max_nodes} nodes, m=1..{max_power}: {mismatches} mismatches; "
              f"example graph A^2(3,5)={a2[3, 5]}, row-3 support {support}")
    return ok, detail, {"trees": trees}


# -- 3: normalization --------------------------------------------------------

def check_normalization(trees=100, seed=0):
    two = normalize(np.array([[0, 1], [1, 0]]))
    exact = np.array_equal(two, np.full((2, 2), 0.5))
    rng = Rng(seed).split("normalization")
    worst = 0.0
    for t in range(trees):
        r = rng.split(t)
        g = tree_graph(random_parents(r, int(r.integers(2, 41))))
        for m in (1, 2, 3):
            a_hat = normalize(power(adjacency(g), m))
            worst = max(worst, float(np.abs(a_hat - a_hat.T).max()))
    ok = exact and worst < 1e-12
    return ok, f"2-node graph exact={exact}; max asymmetry over {trees} trees x 3 powers = {worst:.1e}", {}


# -- 4: MSA identities -------------------------------------------------------

def check_msa_identities(seed=0, d=8):
    rng = Rng(seed).split("msa")
    with nx.precision(64):
        g = tree_graph(random_parents(rng.split("tree"), 9))
        a = adjacency(g)
        scales = [Tensor(normalize(power(a, m))[None]) for m in (1, 2, 3)]
        h0 = Tensor(rng.split("h0").normal((1, g.n, d)))
        worst = 0.0
        for k in range(3):
            cfg = tiny_config(d_model=d, scale_weights=[1.0 if i == k else 0.0 for i in range(3)]).model
            out = MultiScaleGCN(cfg, rng.split("gcn"))(h0, scales)
            worst = max(worst, float(np.abs(out.z.data - out.per_scale[k].data).max()))
        msa = MultiScaleGCN(tiny_config(d_model=d).model, rng.split("gcn"))
        ref, _ = oracles.msa_reference(h0.data[0], [s.data[0] for s in scales],
                                       [(p[0].data, p[1].data) for p in msa.weights], [0.1, 0.2, 0.7])
        oracle_gap = float(np.abs(msa(h0, scales).z.data[0] - ref).max())
        zero = gcn_layer(h0, scales[0], Tensor(np.zeros((d, d))), residual=True)
        zero_exact = bool(np.array_equal(zero.data, h0.data))
    ok = worst <= 1e-6 and zero_exact and oracle_gap <= 1e-10
    detail = (f"one-hot weights vs single scale max diff {worst:.1e}; zero-weight residual GCN "
              f"returns H0 exactly={zero_exact}; straight-line reference gap {oracle_gap:.1e}")
    return ok, detail, {}


# -- 5: causality and masking ------------------------------------------------

def random_model_config(rng: Rng) -> RunConfig:
    d = [8, 12, 16][int(rng.integers(0, 3))]
    heads = [h for h in (1, 2, 4) if d % h == 0][int(rng.integers(0, 3))]
    return tiny_config(d_model=d, heads=heads, layers=int(rng.integers(1, 3)), d_ff=2 * d,
                       scale_count=int(rng.integers(1, 6)), fusion=["acf", "attention"][int(rng.integers(0, 2))],
                       residual=bool(rng.integers(0, 2)), init_mode=["learned", "hashed"][int(rng.integers(0, 2))],
                       scale_weights=None)


def check_masking(configs=50, seed=0):
    examples = toy_examples()
    vocabs = Vocabs.build(examples)
    rng = Rng(seed).split("masking")
    dec_drift = enc_drift = 0.0
    with nx.precision(64), nx.no_grad():
        for c in range(configs):
            r = rng.split(c)
            cfg = random_model_config(r)
            model = M2TSModel(cfg.model, len(vocabs.code), len(vocabs.nl), len(vocabs.node), seed=c).eval()
            builder = BatchBuilder(vocabs, cfg.model.scale_count)
            pick = r.choice(len(examples), 3, replace=False)
            batch = builder.build([examples[i] for i in pick])

            memory = model.encode(batch)
            logits = model.decode(memory, batch.nl_in).data
            t = int(r.integers(1, batch.nl_in.shape[1]))
            future = batch.nl_in.copy()
            future[:, t:] = r.integers(4, len(vocabs.nl), future[:, t:].shape)
            moved = model.decode(memory, future).data
            dec_drift = max(dec_drift, float(np.abs(moved[:, :t] - logits[:, :t]).max()))

            noisy = copy.copy(batch)
            noisy.code_ids = np.where(batch.code_mask, batch.code_ids,
                                      r.integers(1, len(vocabs.code), batch.code_ids.shape))
            noisy.node_ids = np.where(batch.node_mask, batch.node_ids,
                                      r.integers(1, len(vocabs.node), batch.node_ids.shape))
            other = model.encode(noisy)
            for ref, alt, keep in ((memory.code, other.code, batch.code_mask),
                                   (memory.ast, other.ast, batch.node_mask),
                                   (memory.fused, other.fused, batch.node_mask)):
                diff = np.abs(ref.data - alt.data)[keep]
                enc_drift = max(enc_drift, float(diff.max()))
            out_diff = np.abs(model.decode(other, batch.nl_in).data - logits)
            enc_drift = max(enc_drift, float(out_diff.max()))
    ok = dec_drift <= 1e-6 and enc_drift <= 1e-6
    return ok, (f"{configs} random configs: decoder future-token drift {dec_drift:.1e}, "
                f"encoder PAD drift {enc_drift:.1e}"), {}


# -- 6: overfit --------------------------------------------------------------

def overfit_config(epochs=300, lr=1e-2, batch_size=1, seed=0) -> RunConfig:
    cfg = desk_scale(RunConfig())
    cfg.train.lr, cfg.train.batch_size, cfg.train.seed = lr, batch_size, seed
    cfg.train.max_epochs = cfg.train.patience = epochs
    return cfg.validate()


def check_overfit(epochs=300, lr=1e-2, batch_size=1, seed=0, log=None):
    from .inference import evaluate_model
    from .trainer import train

    examples = toy_examples()
    cfg = overfit_config(epochs, lr, batch_size, seed)
    result = train(examples, examples, cfg, on_epoch=log)
    losses = [h["train_loss"] for h in result.history]
    below = next((h["epoch"] for h in result.history if h["train_loss"] < 0.1), None)
    builder = BatchBuilder(result.checkpoint.vocabs, cfg.model.scale_count)
    report, hyps = evaluate_model(result.model, builder, result.checkpoint.vocabs, examples, cfg.decode)
    exact = sum(h == ex.summary_tokens for h, ex in zip(hyps, examples))
    ok = below is not None and exact >= 30 and report.bleu4 >= 0.95
    detail = (f"lr {lr:g} (override of default 1e-4), batch {batch_size}: train loss < 0.1 first at epoch "
              f"{below}, final {losses[-1]:.4f}; beam-5 exact {exact}/{len(examples)}, BLEU-4 {report.bleu4:.4f}")
    return ok, detail, {"first_epoch_below": below, "exact": exact, "bleu4": report.bleu4,
                        "final_train_loss": losses[-1], "config": cfg.to_dict()}


# -- 7: metrics --------------------------------------------------------------

def _restricted_growth(max_len, symbols=3):
    """Strings whose symbols first appear in order 0, 1, 2 (one per relabeling class)."""
    out = [()]
    frontier = [((), 0)]
    for _ in range(max_len):
        nxt = []
        for s, used in frontier:
            for sym in range(min(used + 1, symbols)):
                t = s + (sym,)
                nxt.append((t, max(used, sym + 1)))
                out.append(t)
        frontier = nxt
    return out


def exhaustive_lcs(max_len=8, symbols=3):
    """Compare ``lcs`` with subsequence enumeration on every pair up to relabeling.

    LCS depends only on which positions hold equal symbols, so pairs whose
    first string is in restricted-growth form cover all pairs.
    """
    strings = [s for k in range(max_len + 1) for s in itertools.product(range(symbols), repeat=k)]
    index = {s: i for i, s in enumerate(strings)}
    lengths = np.array([len(s) for s in strings])
    subseq_of = []
    contains = np.zeros((len(strings), len(strings)), dtype=bool)
    for i, s in enumerate(strings):
        subs = {tuple(s[j] for j in idx) for k in range(len(s) + 1) for idx in itertools.combinations(range(len(s)), k)}
        ids = np.fromiter((index[t] for t in subs), dtype=np.int64)
        contains[i, ids] = True
        subseq_of.append(ids)
    pairs = mismatches = 0
    for a in _restricted_growth(max_len, symbols):
        ids = subseq_of[index[a]]
        expected = (contains[:, ids] * lengths[ids]).max(axis=1)
        got = np.fromiter((lcs(a, b) for b in strings), dtype=np.int64, count=len(strings))
        mismatches += int((got != expected).sum())
        pairs += len(strings)
    return pairs, mismatches


CIDER_FIXTURE = [
    ("returns the sum of two numbers".split(), "returns the sum of two values".split()),
    ("checks whether a list is empty".split(), "checks if the list is empty".split()),
    ("counts the items in a list".split(), "returns the number of items".split()),
]


def check_metric_oracles(lcs_len=8):
    checks = {}
    checks["rouge_fixture"] = abs(rouge_l_pair("a b c d".split(), "a c d".split()) - 0.8798) <= 1e-4
    same = [(s.split(), s.split()) for s in ("get the user name", "sort the list in place", "open a file for reading")]
    disjoint = [(s.split(), t.split()) for s, t in (("a b c", "d e f"), ("g h", "i j k"), ("l m n", "o p"))]
    meteor_max = float(np.mean([1 - 0.5 * (1 / len(g)) ** 3 for g, _ in same]))
    checks["identical_max"] = (bleu(same) == 1.0 and rouge_l(same) == 1.0
                               and abs(meteor(same) - meteor_max) < 1e-12 and abs(cider(same) - 10.0) < 1e-9)
    checks["disjoint_zero"] = bleu(disjoint) == meteor(disjoint) == rouge_l(disjoint) == cider(disjoint) == 0.0
    gap = float(np.abs(np.array(cider_scores(CIDER_FIXTURE)) - np.array(oracles.cider_bruteforce(CIDER_FIXTURE))).max())
    checks["cider_bruteforce"] = gap <= 1e-9
    pairs, mismatches = exhaustive_lcs(lcs_len)
    checks["lcs_exhaustive"] = mismatches == 0
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = (f"ROUGE_L fixture, identical/disjoint corpora, CIDEr brute-force gap {gap:.1e}, "
              f"lcs on {pairs} pairs (len <= {lcs_len}, 3 symbols, up to relabeling): {mismatches} mismatches"
              + (f"; failed {failed}" if failed else ""))
    return ok, detail, checks


# -- 8: decoding -------------------------------------------------------------

TRAP = {(): {4: 0.6, 5: 0.4}, (4,): {EOS: 0.3, 4: 0.35, 5: 0.35}, (5,): {EOS: 0.95, 4: 0.025, 5: 0.025}}


def trap_step(prefixes, vocab=6, floor=1e-6):
    """Greedy takes token 4 first and pays for it; beam 2 keeps token 5 alive."""
    out = []
    for row in np.asarray(prefixes):
        body = tuple(int(t) for t in row[1:])
        probs = np.full(vocab, floor)
        for tok, p in TRAP.get(body, {EOS: 0.9, 4: 0.05, 5: 0.05}).items():
            probs[tok] = p
        out.append(np.log(probs / probs.sum()))
    return np.array(out)


def check_decoding(models=50, seed=0, max_len=8):
    examples = toy_examples()
    vocabs = Vocabs.build(examples)
    rng = Rng(seed).split("decoding")
    agree = 0
    from .inference import step_function
    with nx.no_grad():
        for i in range(models):
            r = rng.split(i)
            cfg = tiny_config(d_model=8, heads=2, d_ff=16, scale_weights=None)
            model = M2TSModel(cfg.model, len(vocabs.code), len(vocabs.nl), len(vocabs.node), seed=seed * 1000 + i).eval()
            ex = examples[int(r.integers(0, len(examples)))]
            step = step_function(model, model.encode(BatchBuilder(vocabs, 3).build([ex], with_targets=False)))
            agree += beam_decode(step, 1, max_len) == greedy_decode(step, max_len)
    greedy = greedy_decode(trap_step, 3)
    beam = beam_search(trap_step, 2, 3, 0.7)[0]
    best, best_score = oracles.best_sequence(trap_step, 6, 3, EOS, BOS, 0.7)
    greedy_score = sum(trap_step(np.array([[BOS] + greedy[:t]]))[0][tok]
                       for t, tok in enumerate(greedy + [EOS])) / (len(greedy) + 1) ** 0.7
    trap_ok = beam.tokens == best and beam.score(0.7) > greedy_score + 1e-9 and abs(beam.score(0.7) - best_score) < 1e-12
    ok = agree == models and trap_ok
    return ok, (f"beam 1 == greedy on {agree}/{models} seeded models; trap: greedy {greedy} "
                f"({greedy_score:.4f}) vs beam 2 {beam.tokens} ({beam.score(0.7):.4f}), exhaustive best {best}"), {}


# -- 9: determinism ----------------------------------------------------------

def determinism_args(workdir: Path, epochs=3, batch_size=8):
    return ["train", "--desk-scale", "-o", str(workdir), "--set", "data.train=toy", "--set", "data.valid=toy",
            "--set", "data.test=toy", "--set", f"train.max_epochs={epochs}", "--set", f"train.patience={epochs}",
            "--set", f"train.batch_size={batch_size}", "--set", "train.lr=0.01"]


def check_determinism(epochs=3):
    from . import checkpoint
    from .cli import main
    from .trainer import model_from_checkpoint

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        codes, ckpts, reports = [], [], []
        for run in ("a", "b"):
            out = tmp / run
            codes.append(main(determinism_args(out, epochs), quiet=True))
            codes.append(main(["eval", "--ckpt", str(out / "model.ckpt"), "--split", "test",
                               "-o", str(out / "eval.json")], quiet=True))
            ckpts.append((out / "model.ckpt").read_bytes())
            reports.append((out / "eval.json").read_bytes())
        same_ckpt = ckpts[0] == ckpts[1]
        same_report = reports[0] == reports[1]
        loaded = checkpoint.from_bytes(ckpts[0])
        resaved = checkpoint.to_bytes(loaded) == ckpts[0]
        model, vocabs, cfg = model_from_checkpoint(loaded)
        reloaded, _, _ = model_from_checkpoint(checkpoint.from_bytes(checkpoint.to_bytes(loaded)))
        batch = BatchBuilder(vocabs, cfg.model.scale_count).build(toy_examples()[:4])
        with nx.no_grad():
            same_forward = np.array_equal(model(batch).data, reloaded(batch).data)
    ok = codes == [0, 0, 0, 0] and same_ckpt and same_report and resaved and same_forward
    return ok, (f"exit codes {codes}; checkpoints identical={same_ckpt}, eval reports identical={same_report}, "
                f"load/save bytes identical={resaved}, reloaded forward identical={same_forward}"), {}


# -- 10: ablation ------------------------------------------------------------

def ablation_base(epochs=20, batch_size=4, lr=1e-2, seed=0) -> RunConfig:
    cfg = desk_scale(RunConfig())
    cfg.train.lr, cfg.train.batch_size, cfg.train.seed = lr, batch_size, seed
    cfg.train.max_epochs = cfg.train.patience = epochs
    return cfg.validate()


def check_ablation(epochs=20):
    from .ablation import ablation_matrix, expand_grid

    examples = toy_examples()
    cells = expand_grid(scale_counts=(1, 3), residual=(True, False))
    report = ablation_matrix(ablation_base(epochs), cells, examples, examples, examples)
    finite = all(r.finite() for r in report.rows)
    by = {(r.cell["scale_count"], r.cell["residual"]): r.bleu4 for r in report.rows}
    direction = {res: by[(3, res)] >= by[(1, res)] for res in (True, False)}
    ok = finite and len(report.rows) == len(cells)
    return ok, (f"{len(report.rows)} cells, all metrics finite={finite}; scale 3 >= scale 1 on BLEU-4 "
                f"(recorded, not asserted): residual on {direction[True]}, off {direction[False]}"), \
        {"table": report.to_text(), "direction": direction}


QUICK = [
    (1, "gradient integrity", check_gradients),
    (2, "power-matrix oracle", check_power_oracle),
    (3, "normalization", check_normalization),
    (4, "multi-scale identities", check_msa_identities),
    (5, "causality and masking", check_masking),
    (7, "metric oracles", check_metric_oracles),
    (8, "decoding equivalence", check_decoding),
    (9, "determinism", check_determinism),
]
SLOW = [
    (6, "overfit run", check_overfit),
    (10, "ablation machinery", check_ablation),
]


def run_checks(full=False, only=None, out=print) -> list:
    suites = sorted(QUICK + (SLOW if full else []))
    if only:
        suites = [s for s in QUICK + SLOW if s[0] in set(only)]
    results = []
    for criterion, name, fn in suites:
        try:
            result = _timed(criterion, name, fn)
        except Exception as exc:  # a crashing check is a failed check
            result = CheckResult(criterion, name, False, f"raised {type(exc).__name__}: {exc}")
        results.append(result)
        if out is not None:
            out(result.line())
    return results
