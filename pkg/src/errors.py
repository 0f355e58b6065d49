"""
Error types raised across the pipeline.

Every error carries an ``exit_code`` the CLI uses:
  2 → bad input / corpus / config
  3 → lookup failure (method not found)
Anything that is not an MMTransError exits with 1.
"""
from __future__ import annotations

from typing import Optional, Tuple


class MMTransError(Exception):
    exit_code: int = 2


# ── solc-front ───────────────────────────────────────────────────────────────

class LexError(MMTransError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class ParseError(MMTransError, ValueError):
    def __init__(self, message: str, span: Optional[Tuple[int, int]] = None):
        where = f" at bytes {span[0]}-{span[1]}" if span else ""
        super().__init__(f"{message}{where}")
        self.span = span


class TreeError(MMTransError, ValueError):
    pass


# ── corpus / modalities ──────────────────────────────────────────────────────

class SbtFormatError(MMTransError, ValueError):
    pass


class SplitError(MMTransError, ValueError):
    pass


class SchemaError(MMTransError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: str = ""):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(f"{where}{message}")
        self.line = line
        self.path = path


class DatasetIoError(MMTransError, OSError):
    pass


class EmptyCorpus(MMTransError, ValueError):
    pass


# ── tensor ───────────────────────────────────────────────────────────────────

class ShapeError(MMTransError, ValueError):
    pass


class NotScalar(MMTransError, ValueError):
    pass


class TapeError(MMTransError, RuntimeError):
    pass


# ── model / trainer / metrics ────────────────────────────────────────────────

class ConfigError(MMTransError, ValueError):
    pass


class CheckpointError(MMTransError, ValueError):
    pass


class DataModelMismatch(MMTransError, ValueError):
    pass


class EvalError(MMTransError, ValueError):
    pass


class EmptyReference(MMTransError, ValueError):
    pass


class EmptyInput(MMTransError, ValueError):
    pass


class MethodNotFound(MMTransError, LookupError):
    exit_code = 3
