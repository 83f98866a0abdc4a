import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from m2ts import numerics as nx
from m2ts import oracles
from m2ts.errors import DimensionError
from m2ts.model import ACFFusion
from m2ts.model.fusion import AdditiveAttention, AdditiveFusion
from m2ts.numerics import Rng, Tensor


def inputs(n=5, lc=4, d=8, seed=0):
    r = Rng(seed).split("inputs")
    return (Tensor(r.normal((1, n, d))), Tensor(r.normal((1, n, d))), Tensor(r.normal((1, lc, d))))


def reference(acf, z, z_prime, m, keep, d_k):
    p = acf.proj_q, acf.proj_k, acf.proj_v
    return oracles.acf_reference(z.data[0], z_prime.data[0], m.data[0],
                                 p[0].weight.data, p[0].bias.data, p[1].weight.data, p[1].bias.data,
                                 p[2].weight.data, p[2].bias.data, d_k, keep)


def test_single_code_token_adds_its_value(f64):
    acf = ACFFusion(8, 4, Rng(0))
    z, z_prime, m = inputs(lc=1)
    out = acf(z, z_prime, m, np.ones((1, 1), dtype=bool)).data[0]
    v = m.data[0, 0] @ acf.proj_v.weight.data + acf.proj_v.bias.data
    assert np.max(np.abs(out - (z.data[0] + v))) <= 1e-12


def test_zero_value_projection_returns_z(f64):
    acf = ACFFusion(8, 4, Rng(1))
    acf.proj_v.weight.assign(np.zeros((8, 8)))
    acf.proj_v.bias.assign(np.zeros(8))
    z, z_prime, m = inputs()
    np.testing.assert_array_equal(acf(z, z_prime, m, np.ones((1, 4), dtype=bool)).data, z.data)


@pytest.mark.parametrize("seed", range(4))
def test_matches_straight_line(f64, seed):
    acf = ACFFusion(8, 4, Rng(seed))
    z, z_prime, m = inputs(seed=seed)
    keep = np.array([True, True, False, True])
    out = acf(z, z_prime, m, keep[None]).data[0]
    assert np.max(np.abs(out - reference(acf, z, z_prime, m, keep, 4))) <= 1e-12


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_fused_minus_z_stays_in_value_envelope(seed, n, lc):
    with nx.precision(64):
        acf = ACFFusion(8, 4, Rng(seed))
        z, z_prime, m = inputs(n, lc, seed=seed)
        keep = np.ones((1, lc), dtype=bool)
        keep[0, -1] = lc == 1
        out = acf(z, z_prime, m, keep).data[0] - z.data[0]
        v = acf.proj_v(m).data[0][keep[0]]
        assert np.all(out >= v.min(axis=0) - 1e-12) and np.all(out <= v.max(axis=0) + 1e-12)


def test_padding_gets_zero_weight():
    acf = ACFFusion(8, 4, Rng(2))
    z, z_prime, m = inputs()
    keep = np.array([[True, False, True, False]])
    acf(z, z_prime, m, keep)
    assert np.all(acf.last_weights[..., ~keep[0]] == 0)
    assert np.all(np.abs(acf.last_weights.sum(axis=-1) - 1) <= 1e-6)


def test_shape_mismatch():
    z, _, m = inputs()
    with pytest.raises(DimensionError):
        ACFFusion(8, 4, Rng(0))(z, Tensor(np.zeros((1, 4, 8))), m, np.ones((1, 4), dtype=bool))


def test_acf_grad_check(f64):
    acf = ACFFusion(6, 3, Rng(3))
    r = Rng(4)
    z = Tensor(r.normal((2, 3, 6)), requires_grad=True, name="z")
    z_prime = Tensor(r.normal((2, 3, 6)), requires_grad=True, name="z_prime")
    m = Tensor(r.normal((2, 4, 6)), requires_grad=True, name="m")
    keep = np.array([[True, True, True, False], [True, False, True, True]])
    w = Tensor(r.normal((2, 3, 6)))
    params = dict(acf.named_parameters(), z=z, z_prime=z_prime, m=m)
    assert {"proj_q.weight", "proj_k.weight", "proj_v.bias"} <= set(params)
    report = nx.grad_check(lambda: nx.tsum(nx.mul(acf(z, z_prime, m, keep), w)), params, tol=1e-5, samples=300)
    assert report.passed, report.summary()


# -- additive attention ------------------------------------------------------

def test_additive_identical_modalities_pool_equally(f64):
    fusion = AdditiveFusion(8, Rng(5))
    for src, dst in zip(fusion.ast_attn.parameters(), fusion.code_attn.parameters()):
        dst.assign(src.data.copy())
    _, z_prime, _ = inputs()
    keep = np.ones((1, 5), dtype=bool)
    a = fusion.ast_attn(z_prime, z_prime, keep).data
    b = fusion.code_attn(z_prime, z_prime, keep).data
    np.testing.assert_array_equal(a, b)
    out = fusion(z_prime, z_prime, z_prime, keep, keep).data
    assert np.max(np.abs(out - 2 * a)) <= 1e-12


def test_additive_weights_are_a_distribution():
    attn = AdditiveAttention(8, Rng(6))
    _, q, k = inputs()
    keep = np.array([[True, True, False, True]])
    attn(q, k, keep)
    assert np.all(np.abs(attn.last_weights.sum(axis=-1) - 1) <= 1e-6)
    assert np.all(attn.last_weights[..., 2] == 0)


def test_additive_grad_check(f64):
    fusion = AdditiveFusion(4, Rng(7))
    z, z_prime, m = inputs(n=3, lc=2, d=4)
    z_prime.requires_grad = True
    keep = np.ones((1, 2), dtype=bool)
    report = nx.grad_check(lambda: nx.tsum(nx.tanh(fusion(z, z_prime, m, keep, np.ones((1, 3), dtype=bool)))),
                           dict(fusion.named_parameters(), z_prime=z_prime), tol=1e-5, samples=120)
    assert report.passed, report.summary()
