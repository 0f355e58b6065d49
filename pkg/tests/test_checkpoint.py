"""Tests for checkpoint save / load and its refusal cases."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import json

import numpy as np
import pytest

from src.batching import EncodedSample, collate
from src.checkpoint import load_checkpoint, read_header, save_checkpoint
from src.errors import CheckpointError
from src.model import MMTrans, ModelConfig
from src.vocab import Vocab


def _config(**overrides) -> ModelConfig:
    base = dict(d=8, d_model=8, d_ff=16, heads=2, comment_vocab=12, node_vocab=10, sbt_vocab=10,
                code_vocab=10, max_sbt=20, max_nodes=12, max_comment=4, dropout=0.0)
    base.update(overrides)
    return ModelConfig(**base)


@pytest.fixture
def vocabs():
    return {
        "comment": Vocab([f"w{i}" for i in range(8)], "comment"),
        "nodes": Vocab([f"n{i}" for i in range(6)], "nodes"),
        "sbt": Vocab([f"s{i}" for i in range(6)], "sbt"),
        "code": Vocab([f"c{i}" for i in range(6)], "code"),
    }


@pytest.fixture
def saved(tmp_path, vocabs):
    model = MMTrans(_config())
    moments = {"m": {k: np.full_like(v, 0.5) for k, v in model.params.arrays().items()},
               "v": {k: np.full_like(v, 0.25) for k, v in model.params.arrays().items()}}
    path = save_checkpoint(tmp_path / "ckpt" / "best.npz", model, vocabs, {"step": 7, "epoch": 1}, moments)
    return path, model


def test_round_trip(saved, vocabs):
    path, model = saved
    ckpt = load_checkpoint(path, expected_config=_config(), expected_vocabs=vocabs)
    assert ckpt.config == model.config
    assert ckpt.train_state == {"step": 7, "epoch": 1}
    assert {c: v.itos for c, v in ckpt.vocabs.items()} == {c: v.itos for c, v in vocabs.items()}
    for name, arr in model.params.arrays().items():
        np.testing.assert_array_equal(ckpt.params[name].data, arr)
    np.testing.assert_array_equal(ckpt.moments["v"]["out.W"], 0.25)
    assert not list(path.parent.glob("*.tmp"))


def test_header(saved):
    header = read_header(saved[0])
    assert header["format_version"] == 1
    assert header["config"]["heads"] == 2


def test_config_mismatch(saved):
    with pytest.raises(CheckpointError, match="different model config"):
        load_checkpoint(saved[0], expected_config=_config(heads=4))


def test_vocab_mismatch(saved, vocabs):
    other = dict(vocabs, comment=Vocab([f"x{i}" for i in range(8)], "comment"))
    with pytest.raises(CheckpointError, match="vocabulary comment"):
        load_checkpoint(saved[0], expected_vocabs=other)


def _rewrite(path, mutate):
    with np.load(path, allow_pickle=False) as z:
        entries = {k: z[k] for k in z.files}
    header = json.loads(str(entries["header"]))
    mutate(header, entries)
    entries["header"] = np.array(json.dumps(header))
    with open(path, "wb") as f:
        np.savez(f, **entries)


def test_wrong_format_version(saved):
    path = saved[0]
    _rewrite(path, lambda h, e: h.update(format_version=99))
    with pytest.raises(CheckpointError, match="format version"):
        load_checkpoint(path)


def test_missing_parameter(saved):
    path = saved[0]
    _rewrite(path, lambda h, e: e.pop("param:out.b"))
    with pytest.raises(CheckpointError, match="parameter set"):
        load_checkpoint(path)


def test_tampered_vocabulary(saved):
    path = saved[0]
    _rewrite(path, lambda h, e: h["vocabs"]["sbt"].reverse())
    with pytest.raises(CheckpointError, match="recorded hash"):
        load_checkpoint(path)


def test_not_a_checkpoint(tmp_path):
    path = tmp_path / "junk.npz"
    path.write_bytes(b"not an archive")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.npz")


def test_loaded_model_predicts_the_same(saved):
    path, model = saved
    batch = collate([EncodedSample(comment=[2, 5, 6, 3], nodes=[4, 5, 6], edges=[(0, 1), (0, 2)],
                                   sbt=[2, 4, 5, 3], code=[2, 4, 3])])
    np.testing.assert_allclose(load_checkpoint(path).model().forward(batch).data, model.forward(batch).data)
