"""
Method extraction — pulls every function/modifier out of a parsed file and
attaches the documentation comment written directly above it.

A comment run attaches to a method when only whitespace separates them.  A
comment that trails code on the same line (``uint x; // counter``) starts a
new run only if a line break precedes it, so it never leaks onto the next
method.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .logger import get_logger
from .solidity_lexer import Token, tokenize
from .solidity_parser import AstNode, assign_ids

log = get_logger("methods")

METHOD_LABELS = ("FunctionDefinition", "ModifierDefinition")
SPECIAL_NAMES = ("constructor", "fallback", "receive")


@dataclass
class MethodRecord:
    kind: str                       # function | modifier | constructor | fallback | receive
    name: str
    ast: AstNode = field(repr=False)
    doc: Optional[str] = None       # raw comment block, comment lexemes joined by newlines
    span: Tuple[int, int] = (0, 0)
    contract: Optional[str] = None  # None for free functions


def method_kind(node: AstNode, contract_name: Optional[str]) -> Tuple[str, str]:
    """Return (kind, name) for a FunctionDefinition / ModifierDefinition node."""
    name_node = node.child("SimpleName")
    if node.type_label == "ModifierDefinition":
        return "modifier", name_node.value if name_node else ""
    if name_node is None:
        return "fallback", "fallback"
    name = name_node.value
    if name in SPECIAL_NAMES:
        return name, name
    if contract_name is not None and name == contract_name:
        return "constructor", name
    return "function", name


def _doc_before(tokens: List[Token], index: int) -> Optional[str]:
    run: List[str] = []
    i = index - 1
    while i >= 0 and tokens[i].is_comment:
        tok = tokens[i]
        # A trailing same-line comment belongs to the code before it.
        if i > 0 and not tokens[i - 1].is_comment and "\n" not in tok.leading:
            break
        run.append(tok.lexeme)
        i -= 1
    if not run:
        return None
    return "\n".join(reversed(run))


def extract_methods(unit_ast: AstNode, source: str) -> List[MethodRecord]:
    tokens = tokenize(source)
    start_index: Dict[int, int] = {t.span[0]: i for i, t in enumerate(tokens)}

    records: List[MethodRecord] = []

    def visit(node: AstNode, contract_name: Optional[str]) -> None:
        kind, name = method_kind(node, contract_name)
        doc = None
        if node.span is not None and node.span[0] in start_index:
            doc = _doc_before(tokens, start_index[node.span[0]])
        method_ast = assign_ids(copy.deepcopy(node))
        records.append(MethodRecord(
            kind=kind, name=name, ast=method_ast, doc=doc,
            span=node.span or (0, 0), contract=contract_name,
        ))

    for top in unit_ast.children:
        if top.type_label in METHOD_LABELS:
            visit(top, None)
        elif top.type_label == "ContractDefinition":
            name_node = top.child("SimpleName")
            contract_name = name_node.value if name_node else None
            for member in top.children:
                if member.type_label in METHOD_LABELS:
                    visit(member, contract_name)

    log.debug(f"Extracted methods | count={len(records)} | documented={sum(r.doc is not None for r in records)}")
    return records
