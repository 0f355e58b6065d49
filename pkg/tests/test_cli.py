"""End-to-end tests for the command-line entry point."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import json
from pathlib import Path

import pytest

from src.cli import main

ROOT = Path(__file__).resolve().parent.parent
TOY_CORPUS = ROOT / "data" / "toy_corpus"
LATIUM = TOY_CORPUS / "LatiumSeller.sol"

SMALL_RUN = """d=8
d_model=8
d_ff=16
heads=2
max_sbt=60
max_nodes=30
dropout=0.0
batch_size=30
warmup_steps=10
"""


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv("MMTRANS_SEED", raising=False)


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy") / "dataset"
    code = main(["build-corpus", "--src", str(TOY_CORPUS), "--out", str(out), "--max-sbt", "60",
                 "--max-nodes", "30", "--no-progress"])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def trained(dataset_dir, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("run")
    cfg = run_dir / "small.cfg"
    cfg.write_text(SMALL_RUN, encoding="utf-8")
    code = main(["train", "--config", str(cfg), "--data", str(dataset_dir), "--out", str(run_dir / "out"),
                 "--max-steps", "2", "--no-progress"])
    assert code == 0
    return run_dir / "out"


# ── build-corpus ─────────────────────────────────────────────────────────────

def test_build_corpus_outputs(dataset_dir):
    for name in ("train.jsonl", "valid.jsonl", "test.jsonl", "meta.json"):
        assert (dataset_dir / name).exists()
    for channel in ("sbt", "nodes", "comment", "code"):
        assert (dataset_dir / "vocab" / f"{channel}.txt").exists()


def test_build_corpus_report(tmp_path, capsys):
    assert main(["build-corpus", "--src", str(TOY_CORPUS), "--out", str(tmp_path / "d"), "--no-progress"]) == 0
    out = capsys.readouterr().out
    assert "pairs: 30" in out
    assert "dropped kind-filtered: 4" in out


def test_build_corpus_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["build-corpus", "--src", str(TOY_CORPUS), "--out", str(tmp_path / name),
                     "--seed", "5", "--no-progress"]) == 0
    for name in ("train.jsonl", "valid.jsonl", "test.jsonl", "vocab/comment.txt", "vocab/sbt.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_build_corpus_empty_directory(tmp_path, capsys):
    (tmp_path / "src").mkdir()
    assert main(["build-corpus", "--src", str(tmp_path / "src"), "--out", str(tmp_path / "out")]) == 2
    assert "empty corpus" in capsys.readouterr().err


# ── inspect ──────────────────────────────────────────────────────────────────

def test_inspect_sbt(capsys):
    assert main(["inspect", "--sol", str(LATIUM), "--method", "_tokensToSell", "--show", "sbt"]) == 0
    out = capsys.readouterr().out
    assert "( FunctionDefinition" in out
    assert "_tokens To Sell" in out


def test_inspect_graph_and_code(capsys):
    assert main(["inspect", "--sol", str(LATIUM), "--method", "_tokensToSell", "--show", "graph"]) == 0
    assert "FunctionDefinition" in capsys.readouterr().out
    assert main(["inspect", "--sol", str(LATIUM), "--method", "_tokensToSell", "--show", "code"]) == 0
    assert "return latium . balance Of" in capsys.readouterr().out


def test_inspect_unknown_method(capsys):
    assert main(["inspect", "--sol", str(LATIUM), "--method", "nope"]) == 3
    assert "_tokensToSell" in capsys.readouterr().err


def test_inspect_missing_file(tmp_path):
    assert main(["inspect", "--sol", str(tmp_path / "x.sol"), "--method", "f"]) == 2


# ── score ────────────────────────────────────────────────────────────────────

def test_score_identity(tmp_path, capsys):
    f = tmp_path / "refs.txt"
    f.write_text("get the owner balance\nsend tokens to the buyer\n", encoding="utf-8")
    assert main(["score", "--predictions", str(f), "--references", str(f)]) == 0
    assert "S-BLEU 100.00" in capsys.readouterr().out


def test_score_line_mismatch(tmp_path):
    pred, ref = tmp_path / "p.txt", tmp_path / "r.txt"
    pred.write_text("a\nb\n", encoding="utf-8")
    ref.write_text("a\n", encoding="utf-8")
    assert main(["score", "--predictions", str(pred), "--references", str(ref)]) == 2


# ── train / evaluate / summarize ─────────────────────────────────────────────

def test_train_writes_checkpoints(trained):
    assert (trained / "last.npz").exists()
    assert (trained / "metrics.jsonl").exists()


def test_evaluate(trained, dataset_dir, capsys):
    assert main(["evaluate", "--checkpoint", str(trained / "last.npz"), "--data", str(dataset_dir)]) == 0
    assert "S-BLEU" in capsys.readouterr().out
    assert (trained / "predictions.txt").exists()
    assert (trained / "references.txt").exists()


def test_summarize(trained, capsys):
    code = main(["summarize", "--checkpoint", str(trained / "last.npz"), "--sol", str(LATIUM),
                 "--method", "_tokensToSell"])
    assert code == 0
    assert capsys.readouterr().out.endswith("\n")


def test_train_rejects_indivisible_heads(dataset_dir, tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_RUN, encoding="utf-8")
    code = main(["train", "--config", str(cfg), "--data", str(dataset_dir), "--out", str(tmp_path / "o"),
                 "--heads", "3", "--no-progress"])
    assert code == 2
    assert "divisible" in capsys.readouterr().err


def test_train_needs_a_dataset(tmp_path):
    assert main(["train", "--out", str(tmp_path / "o"), "--no-progress"]) == 2


def test_sweep_rejects_bad_head_list(dataset_dir, tmp_path):
    assert main(["sweep-heads", "--data", str(dataset_dir), "--out", str(tmp_path), "--heads-list", "2,x"]) == 2


# ── Toy acceptance runs ──────────────────────────────────────────────────────

TOY_CONFIG = ROOT / "configs" / "toy.cfg"


def _metrics(run_dir: Path):
    lines = (run_dir / "metrics.jsonl").read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines]


@pytest.fixture(scope="module")
def toy_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy-full") / "dataset"
    assert main(["build-corpus", "--src", str(TOY_CORPUS), "--out", str(out), "--no-progress"]) == 0
    return out


@pytest.mark.slow
def test_toy_config_overfits_the_training_split(toy_dataset, tmp_path):
    out = tmp_path / "run"
    code = main(["train", "--config", str(TOY_CONFIG), "--data", str(toy_dataset), "--out", str(out),
                 "--no-progress"])
    assert code == 0
    records = _metrics(out)
    assert max(r["step"] for r in records) <= 2000
    best = max(r["val_sbleu"] for r in records if r["val_sbleu"] is not None)
    assert best >= 0.95
    assert (out / "best.npz").exists()


@pytest.mark.slow
def test_same_seed_gives_identical_losses(toy_dataset, tmp_path):
    losses = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["train", "--config", str(TOY_CONFIG), "--data", str(toy_dataset), "--out", str(out),
                     "--max-steps", "100", "--seed", "3", "--no-progress"])
        assert code == 0
        by_step = {r["step"]: r["train_loss"] for r in _metrics(out) if r["train_loss"] is not None}
        assert max(by_step) == 100
        losses.append(by_step[100])
    assert losses[0] == losses[1]
