"""
Training loop — teacher forcing, Adam with warmup/decay, periodic greedy
validation by sentence BLEU, early stopping, checkpointing.

Files written to the run directory:
  best.npz       checkpoint with the best validation S-BLEU so far
  last.npz       checkpoint at the point training stopped (for resume)
  metrics.jsonl  one record per step: step, epoch, train_loss, lr, val_sbleu
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from tqdm import tqdm

from .batching import EncodedSample, encode_split, make_batches
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .corpus import DatasetSplit, PairSample
from .errors import ConfigError, DataModelMismatch, EvalError, ShapeError
from .logger import get_logger
from .metrics import MetricReport, score_corpus, sentence_bleu
from .model import MMTrans, ModelConfig, ModelParams
from .tensor import Tape
from .vocab import Vocab

log = get_logger("trainer")

BEST, LAST, METRICS_LOG = "best.npz", "last.npz", "metrics.jsonl"
CHANNEL_FIELDS = {"nodes": ("nodes", "edges"), "sbt": ("sbt",), "code": ("code",)}


# ── Schedule and optimizer ───────────────────────────────────────────────────

def lr_schedule(step: int, d_model: int, warmup_steps: int, factor: float = 1.0) -> float:
    """factor · d_model^-0.5 · min(step^-0.5, step · warmup^-1.5); peaks at step = warmup."""
    step = max(step, 1)
    return factor * d_model ** -0.5 * min(step ** -0.5, step * warmup_steps ** -1.5)


@dataclass
class AdamState:
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9

    @classmethod
    def zeros(cls, params: ModelParams, beta1: float = 0.9, beta2: float = 0.98, eps: float = 1e-9) -> "AdamState":
        return cls(
            m={k: np.zeros_like(t.data) for k, t in params.items()},
            v={k: np.zeros_like(t.data) for k, t in params.items()},
            beta1=beta1, beta2=beta2, eps=eps,
        )

    def moments(self) -> Dict[str, Dict[str, np.ndarray]]:
        return {"m": self.m, "v": self.v}


def adam_step(params: ModelParams, grads: Mapping[str, np.ndarray], state: AdamState, rate: float) -> None:
    """Bias-corrected Adam update in place; a missing gradient counts as zero."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1 ** state.t, 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.shape or state.m[name].shape != p.shape:
            raise ShapeError(f"adam_step: {name} has shape {p.shape}, gradient {g.shape}")
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        update = rate * (state.m[name] / c1) / (np.sqrt(state.v[name] / c2) + state.eps)
        p.data = (p.data - update).astype(p.dtype)


# ── State ────────────────────────────────────────────────────────────────────

@dataclass
class TrainState:
    step: int = 0
    epoch: int = 0
    batch_in_epoch: int = 0
    best_val_sbleu: float = -1.0
    patience_left: int = 5
    seed: int = 0
    adam_t: int = 0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "TrainState":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


class EarlyStopping:
    """
    Usage
    -----
    stopper = EarlyStopping(patience=5)
    improved = stopper.update(score)
    if stopper.stopped: ...
    """

    def __init__(self, patience: int = 5, best: float = -1.0, left: Optional[int] = None):
        self.patience = patience
        self.best = best
        self.left = patience if left is None else left

    @property
    def stopped(self) -> bool:
        return self.left <= 0

    def update(self, score: float) -> bool:
        if score > self.best:
            self.best = score
            self.left = self.patience
            return True
        self.left = max(self.left - 1, 0)
        return False


@dataclass
class TrainResult:
    best_checkpoint: Optional[Path]
    last_checkpoint: Path
    best_val_sbleu: float
    state: TrainState
    losses: List[float] = field(default_factory=list)
    validations: List[float] = field(default_factory=list)


# ── Helpers ──────────────────────────────────────────────────────────────────

def check_channels(cfg: ModelConfig, samples: Sequence[PairSample]) -> None:
    needed = [f for c in cfg.channels for f in CHANNEL_FIELDS[c]]
    for i, s in enumerate(samples):
        missing = [f for f in needed if f not in s.channels()]
        if missing:
            raise DataModelMismatch(
                f"mode {cfg.mode} needs channel(s) {missing}, missing from sample {i} ({s.method_name or '?'})"
            )


def decode_comments(model: MMTrans, samples: Sequence[EncodedSample], vocab: Vocab,
                    batch_size: int, max_len: int = 20) -> List[List[str]]:
    """Greedy predictions, aligned with ``samples``."""
    out: List[List[str]] = []
    for batch in make_batches(samples, batch_size, shuffle=False, dtype=model.config.np_dtype):
        out.extend(vocab.decode(ids) for ids in model.greedy_decode(batch, max_len))
    return out


def validation_sbleu(model: MMTrans, samples: Sequence[EncodedSample], references: Sequence[List[str]],
                     vocab: Vocab, batch_size: int, max_len: int = 20) -> float:
    preds = decode_comments(model, samples, vocab, batch_size, max_len)
    return float(np.mean([sentence_bleu(p, r) for p, r in zip(preds, references)]))


def _append_jsonl(path: Path, record: Dict) -> None:
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record) + "\n")


# ── Public API ───────────────────────────────────────────────────────────────

def train(
    run: RunConfig,
    dataset: DatasetSplit,
    vocabs: Mapping[str, Vocab],
    out_dir: Path,
    resume_from: Optional[Path] = None,
    validator: Optional[Callable[[MMTrans], float]] = None,
) -> TrainResult:
    """Run the optimisation loop; ``validator`` replaces greedy S-BLEU when given."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = run.build_model_config({c: len(v) for c, v in vocabs.items()})
    check_channels(cfg, dataset.train)

    val_pairs = dataset.train if run.validate_on_train else dataset.validation
    if not val_pairs:
        log.warning("Validation split is empty | validating on the training split")
        val_pairs = dataset.train
    check_channels(cfg, val_pairs)
    train_enc = encode_split(dataset.train, vocabs)
    val_enc = encode_split(val_pairs, vocabs)
    val_refs = [p.comment_tokens for p in val_pairs]

    model = MMTrans(cfg)
    adam = AdamState.zeros(model.params, run.beta1, run.beta2, run.adam_eps)
    state = TrainState(patience_left=run.patience, seed=run.seed)
    if resume_from is not None:
        ckpt = load_checkpoint(resume_from, expected_config=cfg, expected_vocabs=vocabs)
        model = ckpt.model()
        state = TrainState.from_dict(ckpt.train_state)
        if ckpt.moments is not None:
            adam = AdamState(m=ckpt.moments["m"], v=ckpt.moments["v"], t=state.adam_t,
                             beta1=run.beta1, beta2=run.beta2, eps=run.adam_eps)
        log.info(f"Resumed | from={resume_from} | step={state.step} | epoch={state.epoch}")
    stopper = EarlyStopping(run.patience, state.best_val_sbleu, state.patience_left)

    metrics_path = out_dir / METRICS_LOG
    best_path, last_path = out_dir / BEST, out_dir / LAST
    best_saved: Optional[Path] = best_path if best_path.exists() and resume_from is not None else None
    losses: List[float] = []
    validations: List[float] = []

    def snapshot() -> Dict:
        state.best_val_sbleu, state.patience_left, state.adam_t = stopper.best, stopper.left, adam.t
        return state.to_dict()

    def validate() -> float:
        nonlocal best_saved
        score = validator(model) if validator is not None else validation_sbleu(
            model, val_enc, val_refs, vocabs["comment"], run.batch_size, run.max_decode_len)
        validations.append(score)
        if stopper.update(score):
            best_saved = save_checkpoint(best_path, model, vocabs, snapshot(), adam.moments())
            log.info(f"Validation improved | step={state.step} | s_bleu={score:.4f} | saved={best_path.name}")
        else:
            log.info(f"Validation | step={state.step} | s_bleu={score:.4f} | patience_left={stopper.left}")
        return score

    def finished() -> bool:
        return stopper.stopped or (run.max_steps is not None and state.step >= run.max_steps)

    log.info(f"Training | mode={cfg.mode} | heads={cfg.heads} | params={model.params.count()} | "
             f"train={len(train_enc)} | valid={len(val_enc)} | batch_size={run.batch_size}")
    pbar = tqdm(total=run.max_steps, initial=state.step, desc="Training", disable=not run.progress)
    while state.epoch < run.max_epochs and not finished():
        batches = make_batches(train_enc, run.batch_size, run.seed, state.epoch, shuffle=True, dtype=cfg.np_dtype)
        for bi in range(state.batch_in_epoch, len(batches)):
            state.step += 1
            rate = lr_schedule(state.step, cfg.d_model, run.warmup_steps, run.lr_factor)
            rng = np.random.default_rng([run.seed, state.step]) if cfg.dropout > 0 else None
            with Tape() as tape:
                loss = model.loss(batches[bi], rng)
                grads = tape.backward(loss)
            adam_step(model.params, {name: grads.get(t) for name, t in model.params.items()}, adam, rate)
            state.batch_in_epoch = bi + 1
            losses.append(loss.item())
            pbar.update(1)
            pbar.set_postfix(loss=f"{loss.item():.4f}")

            record = {"step": state.step, "epoch": state.epoch, "train_loss": loss.item(), "lr": rate,
                      "val_sbleu": None}
            if state.step % run.validate_every == 0:
                record["val_sbleu"] = validate()
            _append_jsonl(metrics_path, record)
            if finished():
                break
        else:
            # The epoch's last step was already validated iff it is a multiple of validate_every.
            due = run.validate_at_epoch_end and state.step % run.validate_every != 0 and not stopper.stopped
            epoch = state.epoch
            # Advance first so a snapshot taken by validate() resumes at the next epoch.
            state.epoch += 1
            state.batch_in_epoch = 0
            if due:
                score = validate()
                _append_jsonl(metrics_path, {"step": state.step, "epoch": epoch, "train_loss": None,
                                             "lr": None, "val_sbleu": score})
    pbar.close()

    save_checkpoint(last_path, model, vocabs, snapshot(), adam.moments())
    reason = "patience" if stopper.stopped else ("max_steps" if finished() else "max_epochs")
    log.info(f"Training finished | reason={reason} | steps={state.step} | best_s_bleu={stopper.best:.4f}")
    return TrainResult(best_saved, last_path, stopper.best, state, losses, validations)


def evaluate(
    checkpoint: Path,
    test: Sequence[PairSample],
    out_dir: Optional[Path] = None,
    batch_size: int = 100,
    max_len: int = 20,
) -> MetricReport:
    """Greedy-decode the test split, write predictions/references, score them."""
    if not test:
        raise EvalError("test split is empty")
    ckpt = load_checkpoint(checkpoint)
    model = ckpt.model()
    check_channels(model.config, test)
    encoded = encode_split(test, ckpt.vocabs)
    predictions = decode_comments(model, encoded, ckpt.vocabs["comment"], batch_size, max_len)
    references = [s.comment_tokens for s in test]

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "predictions.txt").write_text("".join(" ".join(p) + "\n" for p in predictions), encoding="utf-8")
        (out_dir / "references.txt").write_text("".join(" ".join(r) + "\n" for r in references), encoding="utf-8")
    report = score_corpus(predictions, references)
    log.info(f"Evaluated | checkpoint={checkpoint} | {report.format()}")
    return report


def run_head_sweep(
    run: RunConfig,
    dataset: DatasetSplit,
    vocabs: Mapping[str, Vocab],
    out_dir: Path,
    heads_list: Sequence[int] = (2, 4, 8, 16, 32),
) -> Dict[int, float]:
    """Train once per head count; returns best validation S-BLEU per J."""
    results: Dict[int, float] = {}
    for heads in heads_list:
        try:
            cfg = RunConfig(**{**run.model_dump(), "heads": heads})
        except ValidationError as e:
            raise ConfigError(f"head count {heads}: {e.errors()[0]['msg']}") from e
        result = train(cfg, dataset, vocabs, Path(out_dir) / f"heads-{heads}")
        results[heads] = result.best_val_sbleu
        log.info(f"Head sweep | J={heads} | best_s_bleu={result.best_val_sbleu:.4f}")
    return results
