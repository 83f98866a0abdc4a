import json

import numpy as np
import pytest

from m2ts import checkpoint
from m2ts import trainer as trainer_mod
from m2ts.config import RunConfig, apply_overrides, desk_scale, load_run_config
from m2ts.corpus import BatchBuilder
from m2ts.errors import CheckpointError, ConfigError, TrainingDiverged
from m2ts.inference import mean_loss
from m2ts.numerics import SGD
from m2ts.trainer import model_from_checkpoint, train
from m2ts.verify import tiny_config


def run_config(epochs=2, batch_size=4, lr=1e-2, **model):
    cfg = tiny_config(**model)
    cfg.train.max_epochs, cfg.train.patience = epochs, epochs
    cfg.train.batch_size, cfg.train.lr = batch_size, lr
    return cfg


@pytest.fixture(scope="module")
def trained(toy):
    return train(toy[:8], toy[8:12], run_config())


# -- training loop -----------------------------------------------------------

def scripted_losses(monkeypatch, values):
    values = list(values)
    monkeypatch.setattr(trainer_mod, "mean_loss", lambda *a, **k: values.pop(0))


def test_patience_zero_stops_after_first_bad_epoch(monkeypatch, toy):
    scripted_losses(monkeypatch, [1.0, 2.0, 0.5, 0.1])
    cfg = run_config(epochs=4)
    cfg.train.patience = 0
    result = train(toy[:4], toy[4:6], cfg)
    assert len(result.history) == 2
    assert result.stop_reason == "early_stop"
    assert result.checkpoint.epoch == 1


def test_patience_counts_consecutive_bad_epochs(monkeypatch, toy):
    scripted_losses(monkeypatch, [1.0, 2.0, 0.5, 0.7, 0.8, 0.1])
    cfg = run_config(epochs=6)
    cfg.train.patience = 2
    result = train(toy[:4], toy[4:6], cfg)
    assert [h["valid_loss"] for h in result.history] == [1.0, 2.0, 0.5, 0.7, 0.8]
    assert result.checkpoint.epoch == 3 and result.checkpoint.best_valid == 0.5


def test_best_weights_are_returned(monkeypatch, toy):
    scripted_losses(monkeypatch, [1.0, 0.5, 3.0])
    seen = []
    result = train(toy[:4], toy[4:6], run_config(epochs=3), on_epoch=seen.append)
    assert [r["epoch"] for r in seen] == [1, 2, 3]
    assert result.checkpoint.epoch == 2 and result.stop_reason == "max_epochs"
    for name, p in result.model.named_parameters():
        np.testing.assert_array_equal(p.data, result.checkpoint.params[name])


def test_same_seed_same_bytes(toy):
    a = train(toy[:8], toy[8:12], run_config())
    b = train(toy[:8], toy[8:12], run_config())
    assert checkpoint.to_bytes(a.checkpoint) == checkpoint.to_bytes(b.checkpoint)


def test_different_seed_different_weights(toy, trained):
    cfg = run_config()
    cfg.train.seed = 1
    other = train(toy[:8], toy[8:12], cfg)
    assert checkpoint.to_bytes(other.checkpoint) != checkpoint.to_bytes(trained.checkpoint)


def test_each_epoch_visits_a_permutation(monkeypatch, toy):
    orders = []

    class Recording(BatchBuilder):
        def batches(self, examples, batch_size, order=None):
            orders.append(list(order))
            return super().batches(examples, batch_size, order)

    monkeypatch.setattr(trainer_mod, "BatchBuilder", Recording)
    train(toy[:10], toy[10:12], run_config(epochs=3, batch_size=3))
    assert len(orders) == 3
    assert all(sorted(o) == list(range(10)) for o in orders)
    assert orders[0] != orders[1]


def test_validation_loss_is_repeatable(trained, toy):
    builder = BatchBuilder(trained.checkpoint.vocabs, 3)
    first = mean_loss(trained.model, builder, toy[8:12], 4)
    assert mean_loss(trained.model, builder, toy[8:12], 4) == first
    assert first == trained.history[trained.checkpoint.epoch - 1]["valid_loss"]


@pytest.mark.parametrize("seed", range(20))
def test_small_sgd_step_lowers_loss(f64, make_model, make_batch, seed):
    model = make_model(seed=seed).astype(np.float64)
    batch = make_batch((0, 1, 2, 3))
    loss = model.loss(batch)
    loss.backward()
    SGD(model.parameters(), lr=1e-4).step()
    assert float(model.loss(batch).data) < float(loss.data)


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning", "ignore:invalid value:RuntimeWarning")
def test_divergence_carries_checkpoint(toy):
    cfg = run_config(epochs=3, lr=1e30)
    with pytest.raises(TrainingDiverged) as info:
        train(toy[:8], toy[8:12], cfg)
    ckpt = info.value.checkpoint
    assert ckpt is not None
    assert all(np.all(np.isfinite(v)) for v in ckpt.params.values())
    checkpoint.from_bytes(checkpoint.to_bytes(ckpt))


def test_empty_splits_rejected(toy):
    with pytest.raises(ValueError):
        train([], toy[:2], run_config())


# -- checkpoints -------------------------------------------------------------

def test_checkpoint_round_trip_is_bitwise(trained, toy, tmp_path):
    path = checkpoint.save(trained.checkpoint, tmp_path / "m.ckpt")
    model, vocabs, cfg = model_from_checkpoint(checkpoint.load(path))
    assert vocabs == trained.checkpoint.vocabs and cfg.to_dict() == trained.checkpoint.config
    batch = BatchBuilder(vocabs, 3).build(toy[:3])
    np.testing.assert_array_equal(model(batch).data, trained.model(batch).data)


def test_loading_ignores_current_seed(trained, toy):
    ckpt = checkpoint.from_bytes(checkpoint.to_bytes(trained.checkpoint))
    ckpt.config["train"]["seed"] = 99
    model, vocabs, _ = model_from_checkpoint(ckpt)
    batch = BatchBuilder(vocabs, 3).build(toy[:2])
    np.testing.assert_array_equal(model(batch).data, trained.model(batch).data)


def test_truncated_checkpoint(trained):
    raw = checkpoint.to_bytes(trained.checkpoint)
    with pytest.raises(CheckpointError, match="corrupt manifest"):
        checkpoint.from_bytes(raw[:200])
    with pytest.raises(CheckpointError, match="corrupt manifest"):
        checkpoint.from_bytes(raw[:-10])


def test_checkpoint_bad_magic(trained):
    with pytest.raises(CheckpointError, match="magic"):
        checkpoint.from_bytes(b"X" + checkpoint.to_bytes(trained.checkpoint))


def test_checkpoint_checksum(trained):
    raw = bytearray(checkpoint.to_bytes(trained.checkpoint))
    raw[-1] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        checkpoint.from_bytes(bytes(raw))


def test_checkpoint_version_mismatch(trained):
    raw = checkpoint.to_bytes(trained.checkpoint)
    head = len(checkpoint.MAGIC)
    size = int(raw[head:head + 16])
    manifest = json.loads(raw[head + 17:head + 17 + size])
    manifest["format_version"] = 99
    text = json.dumps(manifest).encode()
    forged = checkpoint.MAGIC + f"{len(text):016d}\n".encode() + text + raw[head + 17 + size:]
    with pytest.raises(CheckpointError, match="version 99"):
        checkpoint.from_bytes(forged)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(FileNotFoundError):
        checkpoint.load(tmp_path / "none.ckpt")


# -- config ------------------------------------------------------------------

def test_defaults():
    cfg = RunConfig().validate()
    m = cfg.model
    assert (m.d_model, m.layers, m.heads, m.d_ff, m.head_dim) == (512, 6, 8, 2048, 64)
    assert m.resolved_weights() == [0.1, 0.2, 0.7]
    assert (cfg.train.lr, cfg.train.batch_size, cfg.train.patience) == (1e-4, 32, 20)
    assert (cfg.decode.beam_size, cfg.decode.len_norm) == (5, 0.7)


def test_desk_scale():
    m = desk_scale(RunConfig()).validate().model
    assert (m.d_model, m.layers, m.heads, m.d_ff, m.head_dim) == (64, 2, 2, 128, 32)


def test_patience_beyond_epochs():
    cfg = RunConfig()
    cfg.train.max_epochs, cfg.train.patience = 5, 6
    with pytest.raises(ConfigError):
        cfg.validate()


@pytest.mark.parametrize("field, value", [("heads", 3), ("d_model", 7), ("scale_count", 6), ("fusion", "sum")])
def test_bad_model_config(field, value):
    cfg = RunConfig()
    setattr(cfg.model, field, value)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_overrides_parse_json_values():
    cfg = apply_overrides(RunConfig(), ["train.lr=0.5", "model.fusion=attention", "model.residual=false"])
    assert cfg.train.lr == 0.5 and cfg.model.fusion == "attention" and cfg.model.residual is False


@pytest.mark.parametrize("item", ["lr=1", "train.nope=1", "nope.lr=1"])
def test_bad_override(item):
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), [item])


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("M2TS_SEED", "17")
    assert load_run_config().train.seed == 17
    monkeypatch.setenv("M2TS_SEED", "x")
    with pytest.raises(ConfigError):
        load_run_config()


def test_config_file_and_relative_paths(tmp_path, monkeypatch):
    monkeypatch.delenv("M2TS_SEED", raising=False)
    (tmp_path / "c.json").write_text(json.dumps({"train": {"lr": 0.1}, "data": {"train": "d/train.jsonl"}}))
    cfg = load_run_config(tmp_path / "c.json", ["train.seed=3"])
    assert cfg.train.lr == 0.1 and cfg.train.seed == 3
    assert cfg.data.train == str((tmp_path / "d" / "train.jsonl").resolve())
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_config_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "bad.json")
    (tmp_path / "odd.json").write_text(json.dumps({"model": {"size": 3}}))
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "odd.json")
