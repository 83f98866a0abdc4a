import copy

import numpy as np
import pytest

from m2ts import numerics as nx
from m2ts import oracles
from m2ts.corpus import BatchBuilder, Example
from m2ts.errors import ConfigError
from m2ts.model import Context, Encoder, MultiHeadAttention, positional_encoding
from m2ts.model.layers import key_mask
from m2ts.numerics import Rng, Tensor
from m2ts.verify import tiny_config


def attention(d=8, heads=2, seed=0):
    return MultiHeadAttention(d, heads, d // heads, Rng(seed))


def encoder(layers=2, d=8, heads=2, seed=0):
    cfg = tiny_config(d_model=d, heads=heads, layers=layers, d_ff=2 * d).model
    return Encoder(cfg, Context(), Rng(seed))


# -- positions ---------------------------------------------------------------

def test_position_zero_alternates():
    np.testing.assert_array_equal(positional_encoding(3, 6)[0], [0, 1, 0, 1, 0, 1])


def test_position_one_d4():
    np.testing.assert_allclose(positional_encoding(2, 4)[1], [0.8415, 0.5403, 0.0100, 0.9999], atol=5e-5)
    np.testing.assert_allclose(positional_encoding(2, 4)[1], [np.sin(1), np.cos(1), np.sin(0.01), np.cos(0.01)],
                               rtol=0, atol=1e-15)


def test_position_odd_dimension():
    with pytest.raises(ConfigError):
        positional_encoding(4, 5)


# -- multi-head attention ----------------------------------------------------

def test_single_key_returns_its_value(f64):
    mha = attention()
    q, kv = Tensor(Rng(1).normal((1, 3, 8))), Tensor(Rng(2).normal((1, 1, 8)))
    out = mha(q, kv, key_mask(np.ones((1, 1), dtype=bool))).data[0]
    expected = kv.data[0, 0] @ mha.w_v.data @ mha.w_o.data
    assert np.max(np.abs(out - expected)) <= 1e-12


def test_identical_keys_split_does_not_matter(f64):
    mha = attention()
    row = Rng(3).normal((1, 1, 8))
    q = Tensor(Rng(4).normal((1, 4, 8)))
    two = mha(q, Tensor(np.concatenate([row, row], axis=1)), key_mask(np.ones((1, 2), dtype=bool))).data
    one = mha(q, Tensor(row), key_mask(np.ones((1, 1), dtype=bool))).data
    assert np.max(np.abs(two - one)) <= 1e-12


@pytest.mark.parametrize("heads", [1, 2, 4])
def test_attention_matches_straight_line(f64, heads):
    mha = attention(d=8, heads=heads, seed=heads)
    xq, xkv = Rng(5).normal((1, 3, 8)), Rng(6).normal((1, 4, 8))
    keep = np.array([[True, True, False, True]])
    out = mha(Tensor(xq), Tensor(xkv), key_mask(keep)).data[0]
    ref = oracles.multi_head_reference(xq[0], xkv[0], mha.w_q.data, mha.w_k.data, mha.w_v.data, mha.w_o.data,
                                       heads, np.tile(keep, (3, 1)))
    assert np.max(np.abs(out - ref)) <= 1e-12


def test_attention_rows_sum_to_one_and_respect_mask():
    mha = attention()
    keep = np.array([[True, False, True, True, False]])
    mha(Tensor(Rng(7).normal((1, 2, 8))), Tensor(Rng(8).normal((1, 5, 8))), key_mask(keep))
    w = mha.last_weights
    assert np.all(np.abs(w.sum(axis=-1) - 1) <= 1e-6)
    assert np.all(w[..., ~keep[0]] == 0)


# -- encoders ----------------------------------------------------------------

def test_empty_stack_is_identity():
    x = Tensor(Rng(0).normal((2, 5, 8)))
    assert encoder(layers=0)(x, np.ones((2, 5), dtype=bool)) is x


@pytest.mark.parametrize("length", [1, 3, 7])
def test_encoder_shape(length):
    out = encoder()(Tensor(Rng(length).normal((2, length, 8))), np.ones((2, length), dtype=bool))
    assert out.shape == (2, length, 8)


@pytest.mark.parametrize("seed", range(5))
def test_padding_invariance(seed):
    enc = encoder(seed=seed)
    r = Rng(seed).split("x")
    x = r.normal((1, 4, 8))
    padded = np.concatenate([x, r.normal((1, 3, 8)) * 10], axis=1)
    short = enc(Tensor(x), np.ones((1, 4), dtype=bool)).data
    mask = np.array([[True] * 4 + [False] * 3])
    long = enc(Tensor(padded), mask).data
    assert np.max(np.abs(long[:, :4] - short)) <= 1e-6


def test_encoder_grad_check(f64):
    enc = encoder(layers=2)
    x = Tensor(Rng(1).normal((2, 4, 8)), requires_grad=True, name="x")
    mask = np.array([[True, True, True, False], [True, True, True, True]])
    w = Tensor(Rng(2).normal((2, 4, 8)))
    params = dict(enc.named_parameters())
    params["x"] = x
    report = nx.grad_check(lambda: nx.tsum(nx.mul(enc(x, mask), w)), params, tol=1e-4, samples=200)
    assert report.passed, report.summary()


def test_encoders_have_disjoint_parameters(make_model, make_batch):
    model = make_model(layers=2)
    ast_ids = {id(p) for p in model.ast_encoder.parameters()}
    code_ids = {id(p) for p in model.code_encoder.parameters()}
    assert ast_ids and code_ids and not ast_ids & code_ids
    x = Tensor(Rng(0).normal((1, 4, 16)))
    mask = np.ones((1, 4), dtype=bool)
    assert np.max(np.abs(model.ast_encoder(x, mask).data - model.code_encoder(x, mask).data)) > 1e-3


def test_code_of_length_one(make_model, toy, toy_vocabs):
    ex = Example(["sum"], toy[0].ast, toy[0].summary_tokens)
    memory = make_model().encode(BatchBuilder(toy_vocabs, 3).build([ex]))
    assert memory.code.shape == (1, 1, 16)


def test_node_order_changes_ast_encoding(make_model, toy, toy_vocabs):
    model = make_model(init_mode="hashed")
    ex = toy[3]
    order = [0] + list(range(ex.ast.n - 1, 0, -1))
    moved = Example(ex.code_tokens, ex.ast.permuted(order), ex.summary_tokens)
    builder = BatchBuilder(toy_vocabs, 3)
    a = model.encode(builder.build([ex]))
    b = model.encode(builder.build([moved]))
    # multi-scale output is equivariant, the positional encoding is not
    assert np.max(np.abs(b.msa.z.data[0] - a.msa.z.data[0][order])) <= 1e-5
    assert np.max(np.abs(b.ast.data[0] - a.ast.data[0][order])) > 1e-2


def test_changing_a_real_code_token_changes_outputs(make_model, make_batch):
    model = make_model()
    batch = make_batch()
    base = model.encode(batch)
    other = copy.copy(batch)
    other.code_ids = batch.code_ids.copy()
    other.code_ids[0, 0] = other.code_ids[0, 0] % 20 + 5
    moved = model.encode(other)
    assert np.max(np.abs(moved.code.data[0] - base.code.data[0])) > 1e-3
    assert np.max(np.abs(moved.fused.data[0] - base.fused.data[0])) > 1e-4
    np.testing.assert_array_equal(moved.code.data[1:], base.code.data[1:])
