"""
Id encoding and padded mini-batches.

Masks are boolean keep-masks (True = attend).  The additive large-negative
offset is applied by the attention op, not stored here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .corpus import PairSample
from .modalities import adjacency_from_edges
from .vocab import PAD_ID, Vocab


@dataclass
class EncodedSample:
    comment: List[int]                         # <START> w1 .. wn <END>
    nodes: Optional[List[int]] = None
    edges: Optional[List[Tuple[int, int]]] = None
    sbt: Optional[List[int]] = None
    code: Optional[List[int]] = None
    index: int = 0


@dataclass
class Batch:
    Y: np.ndarray                              # (N, lY) comment ids incl. sentinels
    MY: np.ndarray                             # (N, lY, lY) padding + look-ahead keep-mask
    X: Optional[np.ndarray] = None             # (N, l) node ids
    E: Optional[np.ndarray] = None             # (N, l, l) Ã, zero rows/cols on padding
    M: Optional[np.ndarray] = None             # (N, l)
    Xp: Optional[np.ndarray] = None            # (N, l′) SBT ids
    Mp: Optional[np.ndarray] = None            # (N, l′)
    C: Optional[np.ndarray] = None             # (N, lc) code ids
    MC: Optional[np.ndarray] = None            # (N, lc)
    indices: List[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.Y.shape[0])

    @property
    def target_lengths(self) -> np.ndarray:
        """Non-pad target positions per sample for teacher forcing (words + <END>)."""
        return (self.Y[:, 1:] != PAD_ID).sum(axis=1)


def encode_sample(sample: PairSample, vocabs: Mapping[str, Vocab], index: int = 0) -> EncodedSample:
    enc = EncodedSample(comment=vocabs["comment"].encode(sample.comment_tokens, add_sentinels=True), index=index)
    if "nodes" in vocabs and sample.nodes is not None:
        enc.nodes = vocabs["nodes"].encode(sample.nodes)
        enc.edges = list(sample.edges or [])
    if "sbt" in vocabs and sample.sbt is not None:
        enc.sbt = vocabs["sbt"].encode(sample.sbt)
    if "code" in vocabs and sample.code_tokens is not None:
        enc.code = vocabs["code"].encode(sample.code_tokens)
    return enc


def encode_split(samples: Sequence[PairSample], vocabs: Mapping[str, Vocab]) -> List[EncodedSample]:
    return [encode_sample(s, vocabs, i) for i, s in enumerate(samples)]


# ── Padding and masks ────────────────────────────────────────────────────────

def pad_ids(rows: Sequence[Sequence[int]], length: Optional[int] = None) -> np.ndarray:
    length = max(len(r) for r in rows) if length is None else length
    out = np.full((len(rows), length), PAD_ID, dtype=np.int64)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


def pad_mask(ids: np.ndarray) -> np.ndarray:
    return ids != PAD_ID


def decoder_mask(ids: np.ndarray) -> np.ndarray:
    """(N, L, L) keep-mask: query q may see key k iff k <= q and k is not padding."""
    length = ids.shape[1]
    causal = np.tril(np.ones((length, length), dtype=bool))
    return causal[None, :, :] & pad_mask(ids)[:, None, :]


def pad_adjacency(samples: Sequence[EncodedSample], length: int, dtype=np.float64) -> np.ndarray:
    out = np.zeros((len(samples), length, length), dtype=dtype)
    for i, s in enumerate(samples):
        n = len(s.nodes)
        out[i, :n, :n] = adjacency_from_edges(n, s.edges, dtype=dtype)
    return out


def collate(samples: Sequence[EncodedSample], dtype=np.float64) -> Batch:
    Y = pad_ids([s.comment for s in samples])
    batch = Batch(Y=Y, MY=decoder_mask(Y), indices=[s.index for s in samples])
    if all(s.nodes is not None for s in samples):
        batch.X = pad_ids([s.nodes for s in samples])
        batch.M = pad_mask(batch.X)
        batch.E = pad_adjacency(samples, batch.X.shape[1], dtype)
    if all(s.sbt is not None for s in samples):
        batch.Xp = pad_ids([s.sbt for s in samples])
        batch.Mp = pad_mask(batch.Xp)
    if all(s.code is not None for s in samples):
        batch.C = pad_ids([s.code for s in samples])
        batch.MC = pad_mask(batch.C)
    return batch


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def make_batches(
    samples: Sequence[EncodedSample],
    batch_size: int = 100,
    seed: int = 0,
    epoch: int = 0,
    shuffle: bool = True,
    dtype=np.float64,
) -> List[Batch]:
    """Partition ``samples`` into padded batches; the last short batch is kept."""
    order = epoch_order(len(samples), seed, epoch) if shuffle else np.arange(len(samples))
    return [
        collate([samples[i] for i in order[start:start + batch_size]], dtype)
        for start in range(0, len(samples), batch_size)
    ]
