"""
Checkpoint files — one numpy ``.npz`` archive per checkpoint.

Entries:
  header            JSON text: format version, ModelConfig, vocab digests,
                    vocab token lists, trainer state
  param:<name>      model parameter arrays
  adam_m:<name>     first-moment accumulators  (optional)
  adam_v:<name>     second-moment accumulators (optional)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
from pydantic import ValidationError

from .errors import CheckpointError
from .logger import get_logger
from .model import MMTrans, ModelConfig, ModelParams, parameter_shapes
from .vocab import RESERVED, Vocab

log = get_logger("checkpoint")

FORMAT_VERSION = 1
PARAM, MOMENT1, MOMENT2 = "param:", "adam_m:", "adam_v:"


@dataclass
class Checkpoint:
    config: ModelConfig
    params: ModelParams
    vocabs: Dict[str, Vocab]
    train_state: Dict[str, Any] = field(default_factory=dict)
    moments: Optional[Dict[str, Dict[str, np.ndarray]]] = None   # {"m": {...}, "v": {...}}

    def model(self) -> MMTrans:
        return MMTrans(self.config, self.params)


def save_checkpoint(
    path: Path,
    model: MMTrans,
    vocabs: Mapping[str, Vocab],
    train_state: Optional[Dict[str, Any]] = None,
    moments: Optional[Dict[str, Dict[str, np.ndarray]]] = None,
) -> Path:
    """Write atomically (temp file + rename)."""
    path = Path(path)
    header = {
        "format_version": FORMAT_VERSION,
        "config": model.config.model_dump(),
        "vocab_digests": {c: v.digest() for c, v in vocabs.items()},
        "vocabs": {c: v.itos[len(RESERVED):] for c, v in vocabs.items()},
        "train_state": train_state or {},
    }
    arrays: Dict[str, np.ndarray] = {"header": np.array(json.dumps(header, sort_keys=True))}
    for name, arr in model.params.arrays().items():
        arrays[PARAM + name] = arr
    if moments is not None:
        for name, arr in moments["m"].items():
            arrays[MOMENT1 + name] = arr
        for name, arr in moments["v"].items():
            arrays[MOMENT2 + name] = arr

    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "wb") as f:
            np.savez(f, **arrays)
        os.replace(tmp, path)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}") from e
    log.debug(f"Checkpoint saved | path={path} | params={model.params.count()}")
    return path


def read_header(path: Path) -> Dict[str, Any]:
    try:
        with np.load(Path(path), allow_pickle=False) as z:
            return json.loads(str(z["header"]))
    except (OSError, KeyError, ValueError) as e:
        raise CheckpointError(f"cannot read checkpoint header from {path}: {e}") from e


def load_checkpoint(
    path: Path,
    expected_config: Optional[ModelConfig] = None,
    expected_vocabs: Optional[Mapping[str, Vocab]] = None,
) -> Checkpoint:
    """Load and verify; refuses on format, config or vocabulary mismatch."""
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(str(z["header"]))
            entries = {k: z[k] for k in z.files if k != "header"}
    except (OSError, KeyError, ValueError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {header.get('format_version')}, expected {FORMAT_VERSION}"
        )
    try:
        config = ModelConfig(**header["config"])
    except (KeyError, TypeError, ValidationError) as e:
        raise CheckpointError(f"checkpoint {path} carries an invalid model config: {e}") from e
    if expected_config is not None and expected_config != config:
        raise CheckpointError(f"checkpoint {path} was trained with a different model config")

    vocabs = {c: Vocab(tokens, c) for c, tokens in header.get("vocabs", {}).items()}
    digests = header.get("vocab_digests", {})
    for c, v in vocabs.items():
        if digests.get(c) != v.digest():
            raise CheckpointError(f"checkpoint {path}: vocabulary {c} does not match its recorded hash")
    if expected_vocabs is not None:
        for c, v in expected_vocabs.items():
            if c in digests and digests[c] != v.digest():
                raise CheckpointError(f"checkpoint {path}: vocabulary {c} differs from the dataset's")

    params = {k[len(PARAM):]: v for k, v in entries.items() if k.startswith(PARAM)}
    expected_shapes = parameter_shapes(config)
    if set(params) != set(expected_shapes) or any(params[n].shape != s for n, s in expected_shapes.items()):
        raise CheckpointError(f"checkpoint {path}: parameter set does not match its model config")

    moments = None
    first = {k[len(MOMENT1):]: a for k, a in entries.items() if k.startswith(MOMENT1)}
    second = {k[len(MOMENT2):]: a for k, a in entries.items() if k.startswith(MOMENT2)}
    if first or second:
        moments = {"m": first, "v": second}

    log.debug(f"Checkpoint loaded | path={path} | mode={config.mode} | step={header.get('train_state', {}).get('step', 0)}")
    return Checkpoint(config, ModelParams.from_arrays(params), vocabs, header.get("train_state", {}), moments)
