import pytest

from m2ts import numerics as nx
from m2ts.corpus import BatchBuilder, Vocabs
from m2ts.model import M2TSModel
from m2ts.verify import tiny_config, toy_examples


@pytest.fixture
def f64():
    with nx.precision(64):
        yield


@pytest.fixture(scope="session")
def toy():
    return toy_examples()


@pytest.fixture(scope="session")
def toy_vocabs(toy):
    return Vocabs.build(toy)


@pytest.fixture
def make_model(toy_vocabs):
    """Build a tiny eval-mode model; keyword args override model config fields."""
    def build(seed=0, **overrides):
        cfg = tiny_config(**overrides)
        v = toy_vocabs
        return M2TSModel(cfg.model, len(v.code), len(v.nl), len(v.node), seed=seed).eval()
    return build


@pytest.fixture
def make_batch(toy, toy_vocabs):
    def build(indices=(0, 1, 2), scale_count=3, with_targets=True):
        return BatchBuilder(toy_vocabs, scale_count).build([toy[i] for i in indices], with_targets)
    return build

