"""
Command-line entry point.

Sub-commands:
  build-corpus   .sol directory → train/valid/test JSONL + vocabularies
  train          train one model on a dataset directory
  sweep-heads    train once per head count J
  evaluate       greedy-decode the test split of a dataset and score it
  score          score a predictions file against a references file
  summarize      print the generated comment for one method of a .sol file
  inspect        print the SBT / graph / code view of one method

Exit codes: 0 ok, 1 internal error, 2 input/corpus/config error, 3 lookup error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from dotenv import load_dotenv

from .batching import collate, encode_sample
from .checkpoint import load_checkpoint
from .config import load_run_config
from .corpus import DatasetSplit, build_corpus, method_sample, read_dataset, split_dataset, write_dataset
from .errors import ConfigError, DatasetIoError, MethodNotFound, MMTransError
from .logger import get_logger
from .metrics import score_files
from .method_extractor import MethodRecord, extract_methods
from .modalities import GraphRep, LengthCaps, render_graph
from .solidity_lexer import tokenize
from .solidity_parser import parse
from .trainer import evaluate, run_head_sweep, train
from .vocab import CHANNELS, Vocab, build_vocabs

log = get_logger("cli")

VOCAB_DIR = "vocab"


# ── Helpers ──────────────────────────────────────────────────────────────────

def _default_seed() -> int:
    load_dotenv()
    value = os.getenv("MMTRANS_SEED", "0")
    try:
        return int(value)
    except ValueError as e:
        raise ConfigError(f"MMTRANS_SEED must be an integer, got {value!r}") from e


def dataset_vocabs(data_dir: Path, split: DatasetSplit) -> Dict[str, Vocab]:
    """Vocabularies stored next to the dataset, else rebuilt from its train split."""
    vocab_dir = Path(data_dir) / VOCAB_DIR
    if all((vocab_dir / f"{c}.txt").exists() for c in CHANNELS):
        return {c: Vocab.load(vocab_dir, c) for c in CHANNELS}
    log.info(f"No stored vocabularies under {vocab_dir} | rebuilding from the train split")
    return build_vocabs(split.train)


def find_method(sol: Path, name: str) -> MethodRecord:
    try:
        source = Path(sol).read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetIoError(f"cannot read {sol}: {e}") from e
    records = extract_methods(parse(tokenize(source)), source)
    matches = [r for r in records if r.name == name]
    if not matches:
        known = ", ".join(sorted({r.name for r in records})) or "none"
        raise MethodNotFound(f"method {name!r} not found in {sol} (methods: {known})")
    if len(matches) > 1:
        log.info(f"Method {name} is overloaded | using the first of {len(matches)} definitions")
    return matches[0]


# ── Commands ─────────────────────────────────────────────────────────────────

def cmd_build_corpus(args: argparse.Namespace) -> int:
    caps = LengthCaps(args.max_sbt, args.max_nodes, args.max_comment)
    seed = args.seed if args.seed is not None else _default_seed()
    pairs, stats = build_corpus(Path(args.src), caps, workers=args.workers, progress=not args.no_progress)
    split = split_dataset(pairs, seed)
    out = Path(args.out)
    write_dataset(split, out, caps)
    for channel, vocab in build_vocabs(split.train).items():
        vocab.save(out / VOCAB_DIR, channel)

    print(f"files: {stats.files} (unparseable: {stats.failed_files})")
    print(f"methods: {stats.methods}  pairs: {stats.pairs}")
    for reason, count in sorted(stats.dropped.items()):
        print(f"  dropped {reason}: {count}")
    print(f"train: {len(split.train)}  valid: {len(split.validation)}  test: {len(split.test)}")
    return 0


def _run_config(args: argparse.Namespace):
    overrides = {
        "data_dir": args.data, "out_dir": args.out, "mode": args.mode,
        "heads": getattr(args, "heads", None), "max_steps": args.max_steps, "seed": args.seed,
    }
    if args.no_progress:
        overrides["progress"] = False
    run = load_run_config(Path(args.config) if args.config else None, overrides)
    if not run.data_dir:
        raise ConfigError("no dataset directory: pass --data or set data_dir in the config file")
    return run


def cmd_train(args: argparse.Namespace) -> int:
    run = _run_config(args)
    split = read_dataset(Path(run.data_dir))
    vocabs = dataset_vocabs(Path(run.data_dir), split)
    result = train(run, split, vocabs, Path(run.out_dir),
                   resume_from=Path(args.resume) if args.resume else None)
    print(f"steps: {result.state.step}  best validation S-BLEU: {100 * max(result.best_val_sbleu, 0.0):.2f}")
    print(f"best checkpoint: {result.best_checkpoint}")
    return 0


def cmd_sweep_heads(args: argparse.Namespace) -> int:
    run = _run_config(args)
    try:
        heads_list = [int(h) for h in args.heads_list.split(",") if h.strip()]
    except ValueError as e:
        raise ConfigError(f"--heads-list must be comma-separated integers, got {args.heads_list!r}") from e
    split = read_dataset(Path(run.data_dir))
    vocabs = dataset_vocabs(Path(run.data_dir), split)
    results = run_head_sweep(run, split, vocabs, Path(run.out_dir), heads_list)
    for heads, score in results.items():
        print(f"J={heads:<3} best validation S-BLEU: {100 * max(score, 0.0):.2f}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    split = read_dataset(Path(args.data))
    out = Path(args.out) if args.out else Path(args.checkpoint).parent
    report = evaluate(Path(args.checkpoint), split.test, out, args.batch_size)
    print(report.format())
    print(f"predictions: {out / 'predictions.txt'}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    report = score_files(Path(args.predictions), Path(args.references))
    print(report.format())
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(Path(args.checkpoint))
    cfg = ckpt.config
    record = find_method(Path(args.sol), args.method)
    sample = method_sample(record, LengthCaps(cfg.max_sbt, cfg.max_nodes, cfg.max_comment))
    batch = collate([encode_sample(sample, ckpt.vocabs)], cfg.np_dtype)
    ids = ckpt.model().greedy_decode(batch, cfg.max_comment)[0]
    print(" ".join(ckpt.vocabs["comment"].decode(ids)))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    record = find_method(Path(args.sol), args.method)
    caps = LengthCaps(args.max_sbt, args.max_nodes, LengthCaps().max_comment)
    sample = method_sample(record, caps)
    if args.show == "sbt":
        print(" ".join(sample.sbt))
    elif args.show == "graph":
        print(render_graph(GraphRep(sample.nodes, sample.edges)))
    else:
        print(" ".join(sample.code_tokens))
    return 0


# ── Parser ───────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmtrans", description="Multi-modal code summarizer for Solidity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-corpus", help="Build a dataset from a directory of .sol files")
    p.add_argument("--src", required=True, help="Directory searched recursively for .sol files")
    p.add_argument("--out", required=True, help="Dataset output directory")
    p.add_argument("--seed", type=int, default=None, help="Split seed (default: MMTRANS_SEED or 0)")
    p.add_argument("--max-sbt", type=int, default=600)
    p.add_argument("--max-nodes", type=int, default=200)
    p.add_argument("--max-comment", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-progress", action="store_true")
    p.set_defaults(func=cmd_build_corpus)

    for name, func, text in (("train", cmd_train, "Train a model"),
                             ("sweep-heads", cmd_sweep_heads, "Train once per head count")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key=value run config file")
        p.add_argument("--data", help="Dataset directory written by build-corpus")
        p.add_argument("--out", help="Run output directory")
        p.add_argument("--mode", choices=["mmtrans", "i-mmtrans", "code-only"])
        p.add_argument("--max-steps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--no-progress", action="store_true")
        if name == "train":
            p.add_argument("--heads", type=int, help="Attention head count J")
            p.add_argument("--resume", help="Checkpoint to resume from")
        else:
            p.add_argument("--heads-list", default="2,4,8,16,32", help="Comma-separated head counts")
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="Evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="Where predictions.txt / references.txt go (default: checkpoint dir)")
    p.add_argument("--batch-size", type=int, default=100)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="Score aligned predictions and references files")
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("summarize", help="Generate a comment for one method")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sol", required=True)
    p.add_argument("--method", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("inspect", help="Show one modality of a method")
    p.add_argument("--sol", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--show", choices=["sbt", "graph", "code"], default="sbt")
    p.add_argument("--max-sbt", type=int, default=600)
    p.add_argument("--max-nodes", type=int, default=200)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MMTransError as e:
        log.error(f"{args.command} failed | {type(e).__name__} | {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # noqa: BLE001
        log.exception(f"{args.command} crashed | {e}")
        print(f"internal error: {e}", file=sys.stderr)
        return 1
