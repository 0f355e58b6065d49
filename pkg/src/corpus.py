"""
Corpus builder — turns extracted methods into filtered ⟨method, comment⟩
pairs, splits them 90/5/5 and persists the dataset as JSONL.

Pipeline per .sol file:
  tokenize → parse → extract_methods → make_pair (comment rules + modalities)

Drop reasons counted in CorpusStats:
  kind-filtered   constructor / fallback / receive
  no-comment      no attached doc or nothing selectable in it
  <4 words        first sentence shorter than four tokens
  >20 tokens      first sentence longer than the comment cap
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .comment_extractor import comment_tokens, first_sentence, parse_comment_doc, select_comment
from .errors import DatasetIoError, EmptyCorpus, LexError, ParseError, SchemaError, SplitError
from .logger import get_logger
from .method_extractor import MethodRecord, extract_methods
from .modalities import LengthCaps, code_tokens, graph_extract, normalize_literals, sbt_serialize
from .solidity_lexer import tokenize
from .solidity_parser import AstNode, parse

log = get_logger("corpus")

KEPT_KINDS = ("function", "modifier")
MIN_COMMENT_WORDS = 4
SPLIT_FILES = {"train": "train.jsonl", "validation": "valid.jsonl", "test": "test.jsonl"}
SOURCE_CHANNELS = ("sbt", "nodes", "edges", "code")


# ── Data structures ──────────────────────────────────────────────────────────

@dataclass
class PairSample:
    comment_tokens: List[str]
    code_tokens: Optional[List[str]] = None
    sbt: Optional[List[str]] = None
    nodes: Optional[List[str]] = None
    edges: Optional[List[Tuple[int, int]]] = None
    contract_id: str = ""
    method_name: str = ""
    method_ast: Optional[AstNode] = field(default=None, compare=False, repr=False)

    def key(self) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        return tuple(self.code_tokens or ()), tuple(self.comment_tokens)

    def channels(self) -> List[str]:
        """Source channels present on this sample."""
        present = {"sbt": self.sbt, "nodes": self.nodes, "edges": self.edges, "code": self.code_tokens}
        return [c for c in SOURCE_CHANNELS if present[c] is not None]

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {}
        if self.sbt is not None:
            d["sbt"] = self.sbt
        if self.nodes is not None:
            d["nodes"] = self.nodes
        if self.edges is not None:
            d["edges"] = [[i, j] for i, j in self.edges]
        if self.code_tokens is not None:
            d["code"] = self.code_tokens
        d["comment"] = self.comment_tokens
        d["contract_id"] = self.contract_id
        d["method_name"] = self.method_name
        return d

    @classmethod
    def from_dict(cls, d: Any, line: Optional[int] = None, path: str = "") -> "PairSample":
        if not isinstance(d, dict):
            raise SchemaError("record is not a JSON object", line, path)
        if "comment" not in d:
            raise SchemaError("missing 'comment' field", line, path)

        def token_list(name: str, required: bool = False) -> Optional[List[str]]:
            value = d.get(name)
            if value is None:
                if required:
                    raise SchemaError(f"missing '{name}' field", line, path)
                return None
            if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
                raise SchemaError(f"'{name}' must be a list of strings", line, path)
            return value

        edges = d.get("edges")
        if edges is not None:
            if not isinstance(edges, list) or not all(
                isinstance(e, list) and len(e) == 2 and all(isinstance(k, int) for k in e) for e in edges
            ):
                raise SchemaError("'edges' must be a list of [i, j] integer pairs", line, path)
            edges = [(int(i), int(j)) for i, j in edges]

        return cls(
            comment_tokens=token_list("comment", required=True),
            code_tokens=token_list("code"),
            sbt=token_list("sbt"),
            nodes=token_list("nodes"),
            edges=edges,
            contract_id=str(d.get("contract_id", "")),
            method_name=str(d.get("method_name", "")),
        )


@dataclass
class DatasetSplit:
    train: List[PairSample]
    validation: List[PairSample]
    test: List[PairSample]
    seed: int = 0

    def parts(self) -> Dict[str, List[PairSample]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


@dataclass
class CorpusStats:
    files: int = 0
    failed_files: int = 0
    methods: int = 0
    pairs: int = 0
    dropped: Counter = field(default_factory=Counter)

    def summary(self) -> str:
        reasons = ", ".join(f"{k}={v}" for k, v in sorted(self.dropped.items())) or "none"
        return (f"files={self.files} | failed={self.failed_files} | methods={self.methods} | "
                f"pairs={self.pairs} | dropped: {reasons}")


# ── Pair construction ────────────────────────────────────────────────────────

def method_sample(
    record: MethodRecord,
    caps: LengthCaps = LengthCaps(),
    source_path: str = "",
) -> PairSample:
    """All source modalities of one method; the comment is left empty."""
    ast = normalize_literals(record.ast)
    graph = graph_extract(ast, caps.max_nodes)
    return PairSample(
        comment_tokens=[],
        code_tokens=code_tokens(ast, caps.max_sbt),
        sbt=sbt_serialize(ast, caps.max_sbt).tokens,
        nodes=graph.node_labels,
        edges=graph.edges,
        contract_id=f"{source_path}::{record.contract or ''}",
        method_name=record.name,
        method_ast=ast,
    )


def make_pair_with_reason(
    record: MethodRecord,
    caps: LengthCaps = LengthCaps(),
    source_path: str = "",
) -> Tuple[Optional[PairSample], Optional[str]]:
    if record.kind not in KEPT_KINDS:
        return None, "kind-filtered"
    text = select_comment(parse_comment_doc(record.doc))
    if text is None:
        return None, "no-comment"
    words = comment_tokens(first_sentence(text))
    if len(words) < MIN_COMMENT_WORDS:
        return None, f"<{MIN_COMMENT_WORDS} words"
    if len(words) > caps.max_comment:
        return None, f">{caps.max_comment} tokens"

    sample = method_sample(record, caps, source_path)
    sample.comment_tokens = words
    return sample, None


def make_pair(record: MethodRecord, caps: LengthCaps = LengthCaps()) -> Optional[PairSample]:
    return make_pair_with_reason(record, caps)[0]


# ── Split ────────────────────────────────────────────────────────────────────

def split_dataset(pairs: List[PairSample], seed: int) -> DatasetSplit:
    n = len(pairs)
    if n < 10:
        raise SplitError(f"need at least 10 pairs to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [pairs[i] for i in order]
    n_train = (n * 90) // 100
    n_valid = (n * 5) // 100
    train = shuffled[:n_train]
    valid = shuffled[n_train:n_train + n_valid]
    test = shuffled[n_train + n_valid:]

    train_keys = {p.key() for p in train}
    valid_kept = [p for p in valid if p.key() not in train_keys]
    test_kept = [p for p in test if p.key() not in train_keys]
    removed = (len(valid) - len(valid_kept)) + (len(test) - len(test_kept))
    log.info(f"Split | train={len(train)} | valid={len(valid_kept)} | test={len(test_kept)} | "
             f"leaked_removed={removed} | seed={seed}")
    return DatasetSplit(train, valid_kept, test_kept, seed)


# ── Persistence ──────────────────────────────────────────────────────────────

def write_dataset(split: DatasetSplit, path: Path, caps: LengthCaps = LengthCaps()) -> None:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        for part, samples in split.parts().items():
            with open(path / SPLIT_FILES[part], "w", encoding="utf-8", newline="\n") as f:
                for s in samples:
                    f.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")
        meta = {
            "seed": split.seed,
            "counts": {part: len(samples) for part, samples in split.parts().items()},
            "caps": {"max_sbt": caps.max_sbt, "max_nodes": caps.max_nodes, "max_comment": caps.max_comment},
        }
        (path / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise DatasetIoError(f"cannot write dataset to {path}: {e}") from e
    log.info(f"Dataset written | dir={path} | train={len(split.train)} | "
             f"valid={len(split.validation)} | test={len(split.test)}")


def _read_jsonl(file: Path) -> List[PairSample]:
    try:
        lines = file.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DatasetIoError(f"cannot read {file}: {e}") from e
    samples = []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON ({e.msg})", n, str(file)) from e
        samples.append(PairSample.from_dict(record, n, str(file)))
    return samples


def read_dataset(path: Path) -> DatasetSplit:
    path = Path(path)
    seed = 0
    meta_file = path / "meta.json"
    if meta_file.exists():
        try:
            seed = int(json.loads(meta_file.read_text(encoding="utf-8")).get("seed", 0))
        except (json.JSONDecodeError, ValueError, TypeError) as e:
            raise SchemaError(f"invalid meta.json ({e})", path=str(meta_file)) from e
    parts = {part: _read_jsonl(path / name) for part, name in SPLIT_FILES.items()}
    if not parts["train"]:
        raise SchemaError("train split is empty", path=str(path / SPLIT_FILES["train"]))
    return DatasetSplit(parts["train"], parts["validation"], parts["test"], seed)


# ── Directory walk ───────────────────────────────────────────────────────────

def _process_file(args: Tuple[str, str, LengthCaps]):
    path_str, rel, caps = args
    try:
        source = Path(path_str).read_text(encoding="utf-8")
        records = extract_methods(parse(tokenize(source)), source)
    except (LexError, ParseError, UnicodeDecodeError) as e:
        return [], [], f"{rel}: {e}"
    pairs, reasons = [], []
    for record in records:
        sample, reason = make_pair_with_reason(record, caps, rel)
        if sample is not None:
            pairs.append(sample)
        else:
            reasons.append(reason)
    return pairs, reasons, None


def build_corpus(
    src_dir: Path,
    caps: LengthCaps = LengthCaps(),
    workers: int = 1,
    progress: bool = False,
) -> Tuple[List[PairSample], CorpusStats]:
    src_dir = Path(src_dir)
    files = sorted(p for p in src_dir.rglob("*.sol") if p.is_file())
    if not files:
        raise EmptyCorpus(f"empty corpus: no .sol files under {src_dir}")

    jobs = [(str(p), p.relative_to(src_dir).as_posix(), caps) for p in files]
    stats = CorpusStats(files=len(files))
    pairs: List[PairSample] = []

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(_process_file, jobs), total=len(jobs),
                                desc="Parsing", disable=not progress))
    else:
        results = [_process_file(j) for j in tqdm(jobs, desc="Parsing", disable=not progress)]

    for file_pairs, reasons, error in results:
        if error is not None:
            stats.failed_files += 1
            log.warning(f"Skipped unparseable file | {error}")
            continue
        stats.methods += len(file_pairs) + len(reasons)
        stats.dropped.update(reasons)
        pairs.extend(file_pairs)

    stats.pairs = len(pairs)
    log.info(f"Corpus built | {stats.summary()}")
    if not pairs:
        raise EmptyCorpus(f"empty corpus: no qualifying method/comment pairs under {src_dir}")
    return pairs, stats
