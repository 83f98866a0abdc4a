import numpy as np
import pytest

from m2ts import numerics as nx
from m2ts import oracles
from m2ts.astgraph import build_scales, parse_mini
from m2ts.errors import ConfigError, DimensionError
from m2ts.model import MultiScaleGCN, NodeInit, gcn_layer
from m2ts.numerics import Rng, Tensor
from m2ts.verify import example_graph, tiny_config, tree_graph


def msa_config(d=8, **kw):
    return tiny_config(d_model=d, **kw).model


def stacked(graph, count):
    return [Tensor(s[None]) for s in build_scales(graph, count)]


def random_h0(n, d, seed=0):
    return Tensor(Rng(seed).split("h0").normal((1, n, d)))


# -- node init ---------------------------------------------------------------

@pytest.mark.parametrize("mode", ["learned", "hashed"])
def test_identical_features_identical_rows(mode):
    init = NodeInit(mode, 10, 6, Rng(0))
    ids = np.array([[4, 5, 4]])
    feats = [["Name␟a", "Literal␟1", "Name␟a"]]
    out = init(ids, feats, np.ones((1, 3), dtype=bool), np.float64).data
    np.testing.assert_array_equal(out[0, 0], out[0, 2])
    assert not np.array_equal(out[0, 0], out[0, 1])


def test_hashed_rows_bitwise_stable():
    a = NodeInit("hashed", 1, 16, Rng(7).split("x")).hashed_vector("If")
    b = NodeInit("hashed", 1, 16, Rng(7).split("x")).hashed_vector("If")
    assert a.tobytes() == b.tobytes()
    assert np.all(np.abs(a) <= 1)
    assert NodeInit("hashed", 1, 16, Rng(7)).parameters() == []


def test_learned_rows_receive_gradient(f64):
    init = NodeInit("learned", 8, 4, Rng(0))
    msa = MultiScaleGCN(msa_config(d=4, heads=1), Rng(1))
    g = parse_mini("func f(a) { return a; }")
    ids = np.array([[4, 5, 6, 7, 5, 6]])
    assert ids.shape[1] == g.n
    h0 = init(ids, [g.features], np.ones((1, g.n), dtype=bool), np.float64)
    nx.tsum(msa(h0, stacked(g, 3)).z).backward()
    grad = init.embed.table.grad
    assert all(np.linalg.norm(grad[i]) > 0 for i in set(ids[0].tolist()))
    assert np.linalg.norm(grad[0]) == 0


def test_node_init_unknown_mode():
    with pytest.raises(ConfigError):
        NodeInit("random", 4, 4, Rng(0))


# -- gcn layer ---------------------------------------------------------------

def test_gcn_zero_weight_residual_is_identity(f64):
    h = random_h0(5, 4)
    a_hat = stacked(tree_graph([-1, 0, 0, 1, 1]), 1)[0]
    out = gcn_layer(h, a_hat, Tensor(np.zeros((4, 4))), residual=True)
    np.testing.assert_array_equal(out.data, h.data)


def test_gcn_zero_weight_plain_is_zero(f64):
    h = random_h0(5, 4)
    out = gcn_layer(h, Tensor(np.eye(5)[None]), Tensor(np.zeros((4, 4))), residual=False)
    assert np.all(out.data == 0)


def test_gcn_two_node_hand_value(f64):
    # A_hat H = [[2, 3], [2, 3]]; times W = [[2, -3], [2, -3]]; relu -> [[2, 0], [2, 0]]; plus H
    h = Tensor([[1.0, 2.0], [3.0, 4.0]])
    a_hat = Tensor([[0.5, 0.5], [0.5, 0.5]])
    w = Tensor([[1.0, 0.0], [0.0, -1.0]])
    np.testing.assert_array_equal(gcn_layer(h, a_hat, w, True).data, [[3.0, 2.0], [5.0, 4.0]])
    np.testing.assert_array_equal(gcn_layer(h, a_hat, w, False).data, [[2.0, 0.0], [2.0, 0.0]])


def test_gcn_shape_mismatch():
    with pytest.raises(DimensionError):
        gcn_layer(Tensor(np.ones((3, 4))), Tensor(np.eye(3)), Tensor(np.ones((5, 4))))


# -- cascade -----------------------------------------------------------------

@pytest.mark.parametrize("residual", [True, False])
def test_cascade_matches_straight_line(f64, residual):
    g = example_graph()
    scales = stacked(g, 3)
    msa = MultiScaleGCN(msa_config(residual=residual), Rng(3))
    h0 = random_h0(g.n, 8)
    out = msa(h0, scales)
    ref, zs = oracles.msa_reference(h0.data[0], [s.data[0] for s in scales],
                                    [(a.data, b.data) for a, b in msa.weights], [0.1, 0.2, 0.7], residual)
    assert np.max(np.abs(out.z.data[0] - ref)) <= 1e-12
    for got, want in zip(out.per_scale, zs):
        assert np.max(np.abs(got.data[0] - want)) <= 1e-12


def test_weighted_sum_identity_32_bit():
    g = example_graph()
    msa = MultiScaleGCN(msa_config(), Rng(4))
    out = msa(random_h0(g.n, 8), [Tensor(s.data) for s in stacked(g, 3)])
    total = sum(w * z.data.astype(np.float64) for w, z in zip([0.1, 0.2, 0.7], out.per_scale))
    assert out.z.dtype == np.float32
    assert np.max(np.abs(out.z.data - total)) <= 1e-6


def test_single_scale_is_its_own_output(f64):
    g = example_graph()
    msa = MultiScaleGCN(msa_config(scale_count=1, scale_weights=[1.0]), Rng(5))
    out = msa(random_h0(g.n, 8), stacked(g, 1))
    np.testing.assert_array_equal(out.z.data, out.per_scale[0].data)


@pytest.mark.parametrize("k", range(3))
def test_one_hot_weights_select_scale(f64, k):
    g = example_graph()
    weights = [1.0 if i == k else 0.0 for i in range(3)]
    out = MultiScaleGCN(msa_config(scale_weights=weights), Rng(6))(random_h0(g.n, 8), stacked(g, 3))
    assert np.max(np.abs(out.z.data - out.per_scale[k].data)) <= 1e-6


def test_all_zero_gcn_weights_pass_h0_through(f64):
    g = example_graph()
    msa = MultiScaleGCN(msa_config(), Rng(7))
    for w in msa.gcn:
        w.assign(np.zeros(w.shape))
    h0 = random_h0(g.n, 8)
    out = msa(h0, stacked(g, 3))
    for z in out.per_scale:
        np.testing.assert_array_equal(z.data, h0.data)
    assert np.max(np.abs(out.z.data - h0.data)) <= 1e-15


def test_gradient_reaches_every_scale(f64):
    g = example_graph()
    msa = MultiScaleGCN(msa_config(), Rng(8))
    out = msa(random_h0(g.n, 8), stacked(g, 3))
    nx.tsum(nx.mul(out.z, Tensor(Rng(9).normal(out.z.shape)))).backward()
    assert all(np.linalg.norm(w.grad) > 0 for w in msa.gcn)


def test_trainable_scale_weights_get_gradients(f64):
    g = example_graph()
    msa = MultiScaleGCN(msa_config(trainable_scale_weights=True), Rng(8))
    out = msa(random_h0(g.n, 8), stacked(g, 3))
    nx.tsum(out.z).backward()
    assert np.all(msa.scale_weights.grad != 0)


def test_shared_weights_use_one_pair(f64):
    msa = MultiScaleGCN(msa_config(share_scale_weights=True), Rng(8))
    assert len(msa.gcn) == 2


def test_scale_count_mismatch():
    g = example_graph()
    with pytest.raises(ConfigError):
        MultiScaleGCN(msa_config(), Rng(0))(random_h0(g.n, 8), stacked(g, 2))


@pytest.mark.parametrize("weights", [[0.5, 0.5], [0.5, 0.6, -0.1], [0.2, 0.2, 0.2]])
def test_bad_scale_weights(weights):
    with pytest.raises(ConfigError):
        tiny_config(scale_weights=weights)


def test_permutation_equivariance_hashed(f64):
    g = parse_mini("func area(w, h) { if (w > 0) { return w * h; } return 0; }")
    order = [0] + list(Rng(1).permutation(np.arange(1, g.n)))
    p = g.permuted([int(i) for i in order])
    init = NodeInit("hashed", 1, 8, Rng(2))
    msa = MultiScaleGCN(msa_config(), Rng(3))

    def embed(graph):
        keep = np.ones((1, graph.n), dtype=bool)
        h0 = init(np.zeros((1, graph.n), dtype=int), [graph.features], keep, np.float64)
        return msa(h0, stacked(graph, 3)).z.data[0]

    assert np.max(np.abs(embed(p) - embed(g)[order])) <= 1e-12
