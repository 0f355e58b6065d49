"""MMTrans — multi-modal Transformer code summarizer for Solidity — src package."""
