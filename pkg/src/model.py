"""
MMTrans network — graph encoder + sequence encoder + joint decoder.

  graph encoder     embed(nodes)·√d → hop × GCN(Ã) → +PE → SMAM × N (mask M)
  sequence encoder  embed(sbt | code)·√d → +PE → SMAM × N (mask M′)
  joint decoder     embed(Y)·√d → +PE → causal SMAM × N
                    → MAM over graph memory ∥ MAM over sequence memory
                    → concat → linear → softmax over the comment vocabulary

Modes:
  mmtrans    nodes/edges + sbt
  i-mmtrans  nodes/edges + code
  code-only  code only (single MAM branch, output width d_model)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .batching import Batch, decoder_mask
from .errors import DataModelMismatch, ShapeError
from .tensor import (
    Tensor, add_mask, concat_last, dropout, embed, gather_last, layer_norm, log,
    matmul, mul, relu, reshape, scale, softmax, sum_all, transpose,
)
from .vocab import END_ID, START_ID

MODE_CHANNELS: Dict[str, Tuple[str, ...]] = {
    "mmtrans": ("nodes", "sbt"),
    "i-mmtrans": ("nodes", "code"),
    "code-only": ("code",),
}
LN_EPS = 1e-6


# ── Configuration ────────────────────────────────────────────────────────────

class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: int = Field(256, gt=0)
    d_model: int = Field(256, gt=0)
    d_ff: int = Field(512, gt=0)
    heads: int = Field(4, gt=0)
    layers: int = Field(1, gt=0)
    hop: int = Field(2, ge=0)
    max_sbt: int = Field(600, gt=0)
    max_nodes: int = Field(200, gt=0)
    max_comment: int = Field(20, gt=0)
    comment_vocab: int = Field(5, gt=4)
    node_vocab: int = Field(0, ge=0)
    sbt_vocab: int = Field(0, ge=0)
    code_vocab: int = Field(0, ge=0)
    mode: Literal["mmtrans", "i-mmtrans", "code-only"] = "mmtrans"
    dropout: float = Field(0.1, ge=0.0, lt=1.0)
    gcn_normalize: bool = False
    dtype: Literal["float32", "float64"] = "float64"
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "ModelConfig":
        if self.d != self.d_model:
            raise ValueError(f"embedding size d ({self.d}) must equal d_model ({self.d_model})")
        if self.d % 2:
            raise ValueError(f"embedding size d ({self.d}) must be even for the positional encoding")
        if self.d_model % self.heads:
            raise ValueError(
                f"d_model ({self.d_model}) must be divisible by the head count J ({self.heads})"
            )
        for channel in self.channels:
            if getattr(self, f"{channel if channel != 'nodes' else 'node'}_vocab") <= 4:
                raise ValueError(f"mode {self.mode} needs a {channel} vocabulary")
        return self

    @property
    def channels(self) -> Tuple[str, ...]:
        return MODE_CHANNELS[self.mode]

    @property
    def seq_channel(self) -> str:
        return "sbt" if self.mode == "mmtrans" else "code"

    @property
    def uses_graph(self) -> bool:
        return "nodes" in self.channels

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


# ── Parameters ───────────────────────────────────────────────────────────────

class ModelParams:
    """Named trainable tensors."""

    def __init__(self, tensors: Dict[str, Tensor]):
        self.tensors = tensors

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.tensors.values())

    def items(self):
        return self.tensors.items()

    def names(self) -> List[str]:
        return list(self.tensors)

    def count(self) -> int:
        return int(sum(t.data.size for t in self.tensors.values()))

    def arrays(self) -> Dict[str, np.ndarray]:
        return {k: t.data for k, t in self.tensors.items()}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "ModelParams":
        return cls({k: Tensor(np.array(v), requires_grad=True, name=k) for k, v in arrays.items()})


def parameter_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    D, F = cfg.d_model, cfg.d_ff
    shapes: Dict[str, Tuple[int, ...]] = {"emb.comment": (cfg.comment_vocab, cfg.d)}

    def block(prefix: str) -> None:
        for k in range(cfg.layers):
            p = f"{prefix}.{k}"
            for w in ("Wq", "Wk", "Wv", "Wo"):
                shapes[f"{p}.attn.{w}"] = (D, D)
            shapes[f"{p}.ln1.g"] = shapes[f"{p}.ln1.b"] = (D,)
            shapes[f"{p}.ffn.W1"], shapes[f"{p}.ffn.b1"] = (D, F), (F,)
            shapes[f"{p}.ffn.W2"], shapes[f"{p}.ffn.b2"] = (F, D), (D,)
            shapes[f"{p}.ln2.g"] = shapes[f"{p}.ln2.b"] = (D,)

    if cfg.uses_graph:
        shapes["emb.nodes"] = (cfg.node_vocab, cfg.d)
        for k in range(cfg.hop):
            shapes[f"gcn.{k}.W"] = (cfg.d, cfg.d)
        block("graph_enc")
    seq_vocab = cfg.sbt_vocab if cfg.seq_channel == "sbt" else cfg.code_vocab
    shapes[f"emb.{cfg.seq_channel}"] = (seq_vocab, cfg.d)
    block("seq_enc")
    block("dec_self")
    if cfg.uses_graph:
        block("dec_graph")
    block("dec_seq")
    width = 2 * D if cfg.uses_graph else D
    shapes["out.W"], shapes["out.b"] = (width, cfg.comment_vocab), (cfg.comment_vocab,)
    return shapes


def init_params(cfg: ModelConfig) -> ModelParams:
    """Xavier-uniform matrices, zero biases, unit layer-norm gains; seeded."""
    rng = np.random.default_rng(cfg.seed)
    tensors: Dict[str, Tensor] = {}
    for name, shape in parameter_shapes(cfg).items():
        if len(shape) == 2:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            data = rng.uniform(-bound, bound, size=shape)
        elif name.endswith(".g"):
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        tensors[name] = Tensor(data.astype(cfg.np_dtype), requires_grad=True, name=name)
    return ModelParams(tensors)


# ── Building blocks ──────────────────────────────────────────────────────────

def positional_encoding(max_len: int, d: int) -> np.ndarray:
    """PE[pos, 2i] = sin(pos / 10000^(2i/d)); PE[pos, 2i+1] = cos(same)."""
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    rate = np.power(10000.0, np.arange(0, d, 2, dtype=np.float64) / d)
    pe = np.zeros((max_len, d))
    pe[:, 0::2] = np.sin(pos / rate)
    pe[:, 1::2] = np.cos(pos / rate)
    return pe


def _attention_keep(keep: np.ndarray) -> np.ndarray:
    """Lift a (N, Lk) or (N, Lq, Lk) keep-mask to broadcast over heads."""
    if keep.ndim == 2:
        return keep[:, None, None, :]
    if keep.ndim == 3:
        return keep[:, None, :, :]
    raise ShapeError(f"attention mask must be rank 2 or 3, got {keep.shape}")


def _split_heads(x: Tensor, heads: int) -> Tensor:
    n, length, dm = x.shape
    return transpose(reshape(x, (n, length, heads, dm // heads)), (0, 2, 1, 3))


def multi_head_attention(
    q_in: Tensor,
    kv_in: Tensor,
    keep: np.ndarray,
    Wq: Tensor, Wk: Tensor, Wv: Tensor, Wo: Tensor,
    heads: int,
) -> Tensor:
    if q_in.ndim != 3 or kv_in.ndim != 3 or q_in.shape[0] != kv_in.shape[0]:
        raise ShapeError(f"attention inputs must be (N, L, d_model), got {q_in.shape} and {kv_in.shape}")
    n, lq, dm = q_in.shape
    if dm % heads:
        raise ShapeError(f"d_model {dm} not divisible by {heads} heads")
    dk = dm // heads
    q = _split_heads(matmul(q_in, Wq), heads)                         # (N, J, Lq, dk)
    k = transpose(_split_heads(matmul(kv_in, Wk), heads), (0, 1, 3, 2))  # (N, J, dk, Lk)
    v = _split_heads(matmul(kv_in, Wv), heads)                        # (N, J, Lk, dk)
    scores = add_mask(scale(matmul(q, k), 1.0 / math.sqrt(dk)), _attention_keep(keep))
    ctx = matmul(softmax(scores, axis=-1), v)                         # (N, J, Lq, dk)
    merged = reshape(transpose(ctx, (0, 2, 1, 3)), (n, lq, dm))
    return matmul(merged, Wo)


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """D^-1/2 Ã D^-1/2; all-zero padding rows stay zero."""
    deg = adj.sum(axis=-1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return adj * inv[..., :, None] * inv[..., None, :]


def gcn_layer(H: Tensor, A_tilde: Tensor, W: Tensor) -> Tensor:
    """ReLU(Ã · H · W)."""
    if A_tilde.shape[-1] != H.shape[-2] or A_tilde.shape[-2] != A_tilde.shape[-1]:
        raise ShapeError(f"gcn_layer: adjacency {A_tilde.shape} vs features {H.shape}")
    return relu(matmul(A_tilde, matmul(H, W)))


# ── Model ────────────────────────────────────────────────────────────────────

@dataclass
class Memory:
    """Encoder outputs and the key masks the decoder attends with."""
    graph: Optional[Tensor] = None
    graph_keep: Optional[np.ndarray] = None
    seq: Optional[Tensor] = None
    seq_keep: Optional[np.ndarray] = None


class MMTrans:
    """
    Usage
    -----
    model = MMTrans(config)
    loss = model.loss(batch, rng)            # under a Tape for training
    ids = model.greedy_decode(batch)         # inference
    """

    def __init__(self, config: ModelConfig, params: Optional[ModelParams] = None):
        self.config = config
        self.params = params if params is not None else init_params(config)
        self._pe = positional_encoding(max(config.max_sbt, config.max_nodes, config.max_comment + 2),
                                       config.d).astype(config.np_dtype)

    # ── Blocks ───────────────────────────────────────────────────────────────

    def _pe_for(self, length: int) -> Tensor:
        if length > self._pe.shape[0]:
            self._pe = positional_encoding(length, self.config.d).astype(self.config.np_dtype)
        return Tensor(self._pe[:length])

    def _embed(self, channel: str, ids: np.ndarray) -> Tensor:
        return scale(embed(self.params[f"emb.{channel}"], ids), math.sqrt(self.config.d))

    def attention_module(self, prefix: str, q_in: Tensor, kv_in: Tensor, keep: np.ndarray,
                         rng: Optional[np.random.Generator] = None) -> Tensor:
        """LN(x + Drop(MHA)) then LN(a + Drop(FFN)), stacked ``layers`` times."""
        p, rate = self.params, self.config.dropout
        x = q_in
        for k in range(self.config.layers):
            b = f"{prefix}.{k}"
            kv = kv_in if kv_in is not q_in else x
            att = multi_head_attention(x, kv, keep, p[f"{b}.attn.Wq"], p[f"{b}.attn.Wk"],
                                       p[f"{b}.attn.Wv"], p[f"{b}.attn.Wo"], self.config.heads)
            a = layer_norm(x + dropout(att, rate, rng), p[f"{b}.ln1.g"], p[f"{b}.ln1.b"], LN_EPS)
            hidden = relu(matmul(a, p[f"{b}.ffn.W1"]) + p[f"{b}.ffn.b1"])
            ffn = matmul(hidden, p[f"{b}.ffn.W2"]) + p[f"{b}.ffn.b2"]
            x = layer_norm(a + dropout(ffn, rate, rng), p[f"{b}.ln2.g"], p[f"{b}.ln2.b"], LN_EPS)
        return x

    def smam(self, prefix: str, x: Tensor, keep: np.ndarray,
             rng: Optional[np.random.Generator] = None) -> Tensor:
        return self.attention_module(prefix, x, x, keep, rng)

    def graph_encoder(self, X: np.ndarray, E: np.ndarray, M: np.ndarray,
                      rng: Optional[np.random.Generator] = None) -> Tensor:
        adj = normalized_adjacency(E) if self.config.gcn_normalize else E
        A = Tensor(adj.astype(self.config.np_dtype))
        h = self._embed("nodes", X)
        for k in range(self.config.hop):
            h = gcn_layer(h, A, self.params[f"gcn.{k}.W"])
        h = h + self._pe_for(X.shape[1])
        return self.smam("graph_enc", h, M, rng)

    def sequence_encoder(self, ids: np.ndarray, keep: np.ndarray,
                         rng: Optional[np.random.Generator] = None) -> Tensor:
        h = self._embed(self.config.seq_channel, ids) + self._pe_for(ids.shape[1])
        return self.smam("seq_enc", h, keep, rng)

    # ── Public API ───────────────────────────────────────────────────────────

    def check_batch(self, batch: Batch) -> None:
        missing = [c for c, arr in (("nodes", batch.X), ("sbt", batch.Xp), ("code", batch.C))
                   if c in self.config.channels and arr is None]
        if missing:
            raise DataModelMismatch(f"mode {self.config.mode} needs channel(s) {missing} missing from the data")

    def encode(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Memory:
        self.check_batch(batch)
        mem = Memory()
        if self.config.uses_graph:
            mem.graph = self.graph_encoder(batch.X, batch.E, batch.M, rng)
            mem.graph_keep = batch.M
        if self.config.seq_channel == "sbt":
            ids, keep = batch.Xp, batch.Mp
        else:
            ids, keep = batch.C, batch.MC
        mem.seq = self.sequence_encoder(ids, keep, rng)
        mem.seq_keep = keep
        return mem

    def decode(self, mem: Memory, y_in: np.ndarray, keep: Optional[np.ndarray] = None,
               rng: Optional[np.random.Generator] = None) -> Tensor:
        """Probabilities (N, lY, S) for decoder input ids ``y_in``."""
        keep = decoder_mask(y_in) if keep is None else keep
        h = self._embed("comment", y_in) + self._pe_for(y_in.shape[1])
        h = self.smam("dec_self", h, keep, rng)
        seq_branch = self.attention_module("dec_seq", h, mem.seq, mem.seq_keep, rng)
        if mem.graph is not None:
            graph_branch = self.attention_module("dec_graph", h, mem.graph, mem.graph_keep, rng)
            merged = concat_last(graph_branch, seq_branch)
        else:
            merged = seq_branch
        logits = matmul(merged, self.params["out.W"]) + self.params["out.b"]
        return softmax(logits, axis=-1)

    def forward(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Teacher forcing: feed Y[:, :-1], predict Y[:, 1:]."""
        mem = self.encode(batch, rng)
        return self.decode(mem, batch.Y[:, :-1], batch.MY[:, :-1, :-1], rng)

    def loss(self, batch: Batch, rng: Optional[np.random.Generator] = None) -> Tensor:
        return batch_loss(self.forward(batch, rng), batch.Y[:, 1:], batch.target_lengths)

    def greedy_decode(self, batch: Batch, max_len: int = 20) -> List[List[int]]:
        """Argmax decoding from <START>; each row stops at <END> or ``max_len`` words."""
        mem = self.encode(batch)
        n = batch.size
        ys = np.full((n, 1), START_ID, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        out: List[List[int]] = [[] for _ in range(n)]
        for _ in range(max_len):
            probs = self.decode(mem, ys).data
            nxt = probs[:, -1, :].argmax(axis=-1)
            for i in range(n):
                if done[i]:
                    continue
                if nxt[i] == END_ID:
                    done[i] = True
                else:
                    out[i].append(int(nxt[i]))
            if done.all():
                break
            ys = np.concatenate([ys, nxt[:, None]], axis=1)
        return out


# ── Loss ─────────────────────────────────────────────────────────────────────

def batch_loss(probs: Tensor, y_target: np.ndarray, lengths: np.ndarray) -> Tensor:
    """−(1/N) Σ_i (1/l_i) Σ_{j<l_i} log p(gold_ij)."""
    y_target = np.asarray(y_target)
    lengths = np.asarray(lengths)
    if probs.ndim != 3 or probs.shape[:2] != y_target.shape or lengths.shape != (y_target.shape[0],):
        raise ShapeError(
            f"batch_loss: probs {probs.shape}, targets {y_target.shape}, lengths {lengths.shape}"
        )
    if (lengths <= 0).any() or (lengths > y_target.shape[1]).any():
        raise ShapeError(f"batch_loss: lengths {lengths.tolist()} outside 1..{y_target.shape[1]}")
    n, length = y_target.shape
    positions = np.arange(length)[None, :]
    weights = np.where(positions < lengths[:, None], 1.0 / (lengths[:, None] * n), 0.0)
    logp = log(gather_last(probs, y_target))
    return scale(sum_all(mul(logp, Tensor(weights.astype(probs.dtype)))), -1.0)
