"""Tests for run configuration loading."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from pathlib import Path

import pytest

from src.config import RunConfig, load_run_config
from src.errors import ConfigError

TOY_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "toy.cfg"


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv("MMTRANS_SEED", raising=False)


def _write(tmp_path, text: str) -> Path:
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults():
    cfg = load_run_config()
    assert (cfg.d_model, cfg.heads, cfg.layers, cfg.hop) == (256, 4, 1, 2)
    assert (cfg.batch_size, cfg.patience, cfg.warmup_steps) == (100, 5, 4000)
    assert (cfg.beta1, cfg.beta2, cfg.adam_eps) == (0.9, 0.98, 1e-9)
    assert cfg.max_steps is None


def test_file_values_are_coerced(tmp_path):
    path = _write(tmp_path, "# comment\nd=64\nd_model=64\nheads=8\nmax_steps=none\n"
                            "validate_on_train=true\nmode=code-only\n")
    cfg = load_run_config(path)
    assert cfg.d_model == 64 and cfg.heads == 8
    assert cfg.max_steps is None
    assert cfg.validate_on_train is True
    assert cfg.mode == "code-only"


def test_overrides_win_and_none_is_ignored(tmp_path):
    path = _write(tmp_path, "heads=8\nseed=3\n")
    cfg = load_run_config(path, {"heads": 2, "seed": None, "out_dir": "x"})
    assert cfg.heads == 2
    assert cfg.seed == 3
    assert cfg.out_dir == "x"


def test_seed_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("MMTRANS_SEED", "11")
    assert load_run_config().seed == 11
    assert load_run_config(_write(tmp_path, "seed=4\n")).seed == 4


def test_head_count_must_divide_d_model():
    with pytest.raises(ConfigError, match="divisible"):
        load_run_config(overrides={"heads": 3})


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError, match="learning_rate"):
        load_run_config(_write(tmp_path, "learning_rate=0.1\n"))


def test_bad_value(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, "dropout=1.5\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "nope.cfg")


def test_model_config_from_vocab_sizes():
    cfg = RunConfig(d=16, d_model=16, heads=4).build_model_config(
        {"comment": 10, "nodes": 12, "sbt": 14, "code": 9})
    assert (cfg.comment_vocab, cfg.node_vocab, cfg.sbt_vocab, cfg.code_vocab) == (10, 12, 14, 9)


def test_model_config_needs_vocabularies():
    with pytest.raises(ConfigError):
        RunConfig(d=16, d_model=16).build_model_config({"comment": 10, "nodes": 4, "sbt": 14, "code": 9})


def test_toy_config_loads():
    cfg = load_run_config(TOY_CONFIG)
    assert cfg.d_model == 64
    assert cfg.validate_on_train is True
