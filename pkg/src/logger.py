"""
Centralized logging for MMTrans.
Logs to both console and a rotating file (.mmtrans_data/mmtrans.log).
"""
from __future__ import annotations
import logging
import os
from pathlib import Path
from logging.handlers import RotatingFileHandler

LOG_DIR = Path(os.environ.get("MMTRANS_LOG_DIR", ".mmtrans_data"))
LOG_FILE = LOG_DIR / "mmtrans.log"
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
ROOT_NAME = "mmtrans"

_configured = False


def _configure_root() -> None:
    global _configured
    root = logging.getLogger(ROOT_NAME)
    root.setLevel(logging.DEBUG)
    root.propagate = False
    LOG_DIR.mkdir(parents=True, exist_ok=True)

    # Console handler
    ch = logging.StreamHandler()
    ch.setLevel(logging.INFO)
    ch.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))

    # File handler (rotates at 2MB, keeps 3 backups)
    fh = RotatingFileHandler(LOG_FILE, maxBytes=2_000_000, backupCount=3, encoding="utf-8")
    fh.setLevel(logging.DEBUG)
    fh.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))

    root.addHandler(ch)
    root.addHandler(fh)
    _configured = True


def get_logger(name: str = ROOT_NAME) -> logging.Logger:
    """Return a child of the ``mmtrans`` logger; handlers are attached once."""
    if not _configured:
        _configure_root()
    if name == ROOT_NAME:
        return logging.getLogger(ROOT_NAME)
    return logging.getLogger(f"{ROOT_NAME}.{name}")
