"""
Run configuration.

A config file is flat ``key=value`` text (read with python-dotenv); keys are
the RunConfig field names below.  Precedence, lowest first:
  field defaults → MMTRANS_SEED env var → config file → CLI flags
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .logger import get_logger
from .model import ModelConfig

log = get_logger("config")

_NONE_WORDS = {"", "none", "null"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # paths
    data_dir: Optional[str] = None
    out_dir: str = "runs/default"

    # model
    d: int = Field(256, gt=0)
    d_model: int = Field(256, gt=0)
    d_ff: int = Field(512, gt=0)
    heads: int = Field(4, gt=0)
    layers: int = Field(1, gt=0)
    hop: int = Field(2, ge=0)
    max_sbt: int = Field(600, gt=0)
    max_nodes: int = Field(200, gt=0)
    max_comment: int = Field(20, gt=0)
    mode: Literal["mmtrans", "i-mmtrans", "code-only"] = "mmtrans"
    dropout: float = Field(0.1, ge=0.0, lt=1.0)
    gcn_normalize: bool = False
    dtype: Literal["float32", "float64"] = "float64"

    # trainer
    batch_size: int = Field(100, gt=0)
    max_epochs: int = Field(50, gt=0)
    validate_every: int = Field(500, gt=0)
    validate_at_epoch_end: bool = True
    validate_on_train: bool = False
    patience: int = Field(5, gt=0)
    warmup_steps: int = Field(4000, gt=0)
    lr_factor: float = Field(1.0, gt=0.0)
    max_steps: Optional[int] = Field(None, gt=0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.98, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-9, gt=0.0)
    max_decode_len: int = Field(20, gt=0)
    progress: bool = True
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.d_model % self.heads:
            raise ValueError(
                f"d_model ({self.d_model}) must be divisible by the head count J ({self.heads})"
            )
        if self.d != self.d_model:
            raise ValueError(f"embedding size d ({self.d}) must equal d_model ({self.d_model})")
        return self

    def build_model_config(self, vocab_sizes: Mapping[str, int]) -> ModelConfig:
        try:
            return ModelConfig(
                d=self.d, d_model=self.d_model, d_ff=self.d_ff, heads=self.heads,
                layers=self.layers, hop=self.hop, max_sbt=self.max_sbt,
                max_nodes=self.max_nodes, max_comment=self.max_comment,
                comment_vocab=vocab_sizes["comment"],
                node_vocab=vocab_sizes.get("nodes", 0),
                sbt_vocab=vocab_sizes.get("sbt", 0),
                code_vocab=vocab_sizes.get("code", 0),
                mode=self.mode, dropout=self.dropout, gcn_normalize=self.gcn_normalize,
                dtype=self.dtype, seed=self.seed,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid model configuration: {_first_error(e)}") from e


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ()))
    return f"{where}: {err['msg']}" if where else err["msg"]


def _clean(values: Mapping[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in values.items():
        if isinstance(value, str) and value.strip().lower() in _NONE_WORDS:
            value = None
        out[key] = value
    return out


def load_run_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    load_dotenv()
    values: Dict[str, Any] = {}
    env_seed = os.getenv("MMTRANS_SEED")
    if env_seed:
        values["seed"] = env_seed
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(_clean(dotenv_values(path)))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        cfg = RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_first_error(e)}") from e
    log.debug(f"Run config | mode={cfg.mode} | heads={cfg.heads} | seed={cfg.seed} | file={path}")
    return cfg
