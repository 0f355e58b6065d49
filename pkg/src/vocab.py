"""
Per-channel vocabularies built from the training split only.

Reserved ids: 0 <PAD>, 1 <UNK>, 2 <START>, 3 <END>.  The remaining ids go
to training tokens by descending frequency, ties broken lexicographically,
so a vocabulary is a pure function of the training data.
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from .corpus import PairSample
from .errors import DatasetIoError, EmptyCorpus, SchemaError

PAD, UNK, START, END = "<PAD>", "<UNK>", "<START>", "<END>"
RESERVED = (PAD, UNK, START, END)
PAD_ID, UNK_ID, START_ID, END_ID = range(4)
CHANNELS = ("sbt", "nodes", "comment", "code")


class Vocab:
    """Immutable token ↔ id map for one channel."""

    def __init__(self, tokens: Sequence[str], channel: str = ""):
        self.channel = channel
        self.itos: List[str] = list(RESERVED) + [t for t in tokens if t not in RESERVED]
        self.stoi: Dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise SchemaError(f"duplicate tokens in {channel or 'vocab'}")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    @property
    def size(self) -> int:
        return len(self.itos)

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str], add_sentinels: bool = False) -> List[int]:
        ids = [self.stoi.get(t, UNK_ID) for t in tokens]
        return [START_ID, *ids, END_ID] if add_sentinels else ids

    def decode(self, ids: Iterable[int]) -> List[str]:
        out = []
        for i in ids:
            i = int(i)
            if i == END_ID:
                break
            if i in (PAD_ID, START_ID):
                continue
            out.append(self.itos[i] if 0 <= i < len(self.itos) else UNK)
        return out

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()

    # ── Persistence ──────────────────────────────────────────────────────────

    def save(self, directory: Path, channel: str = "") -> None:
        channel = channel or self.channel
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
            body = "".join(t + "\n" for t in self.itos[len(RESERVED):])
            (directory / f"{channel}.txt").write_text(body, encoding="utf-8")
            meta = {"channel": channel, "size": self.size, "reserved": list(RESERVED)}
            (directory / f"{channel}.meta").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise DatasetIoError(f"cannot write vocabulary {channel} to {directory}: {e}") from e

    @classmethod
    def load(cls, directory: Path, channel: str) -> "Vocab":
        directory = Path(directory)
        try:
            lines = (directory / f"{channel}.txt").read_text(encoding="utf-8").split("\n")
        except OSError as e:
            raise DatasetIoError(f"cannot read vocabulary {channel} from {directory}: {e}") from e
        if lines and lines[-1] == "":
            lines.pop()
        vocab = cls(lines, channel)
        meta_file = directory / f"{channel}.meta"
        if meta_file.exists():
            meta = json.loads(meta_file.read_text(encoding="utf-8"))
            if int(meta.get("size", vocab.size)) != vocab.size:
                raise SchemaError(f"vocabulary {channel}: meta size {meta['size']} != {vocab.size}")
        return vocab


def channel_tokens(sample: PairSample, channel: str) -> List[str]:
    if channel == "comment":
        return sample.comment_tokens
    if channel == "code":
        return sample.code_tokens or []
    if channel in ("sbt", "nodes"):
        return getattr(sample, channel) or []
    raise ValueError(f"unknown channel {channel!r}")


def build_vocab(samples: Sequence[PairSample], channel: str) -> Vocab:
    if not samples:
        raise EmptyCorpus(f"cannot build {channel} vocabulary from an empty training split")
    freq: Dict[str, int] = defaultdict(int)
    for s in samples:
        for tok in channel_tokens(s, channel):
            if tok not in RESERVED:
                freq[tok] += 1
    ordered = sorted(freq, key=lambda t: (-freq[t], t))
    return Vocab(ordered, channel)


def build_vocabs(samples: Sequence[PairSample], channels: Sequence[str] = CHANNELS) -> Dict[str, Vocab]:
    return {c: build_vocab(samples, c) for c in channels}
