"""
MMTrans — multi-modal code summarizer for Solidity smart contracts.

Entry script for the command-line pipeline:
  python app.py build-corpus --src contracts/ --out data/dataset
  python app.py train --config configs/toy.cfg --data data/dataset --out runs/toy
  python app.py evaluate --checkpoint runs/toy/best.npz --data data/dataset
  python app.py inspect --sol contract.sol --method _tokensToSell --show sbt
"""

import sys

from src.cli import main
from src.logger import get_logger

log = get_logger("app")

if __name__ == "__main__":
    log.debug(f"MMTrans starting | argv={sys.argv[1:]}")
    sys.exit(main())
