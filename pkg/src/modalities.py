"""
AST modalities — the two views of a method's AST the encoders consume.

  SBT    bracketed structure-based traversal, exactly invertible via sbt_parse
  graph  pre-order node sequence plus undirected parent/child edges; Ã adds self-loops
  code   plain token stream (leaf values + structural punctuation) for the
         i-mmtrans and code-only modes

Inputs are expected to have been through ``normalize_literals``.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import LexError, SbtFormatError, SchemaError
from .solidity_lexer import ADDRESS, NUMBER, STRING, tokenize
from .solidity_parser import RAW_TEXT_LABELS, AstNode, assign_ids

START, END = "<START>", "<END>"
NUM, STR, ADDR = "<NUM>", "<STR>", "<ADDR>"

_IDENT_RE = re.compile(r"^[A-Za-z_$][A-Za-z0-9_$]*$")
_VALUE_RE = re.compile(
    r"(?P<esc>[ \t\n\r()])"
    r"|(?P<ph><[A-Z]+>)"
    r"|(?P<word>[A-Za-z0-9_$]+)"
    r"|(?P<other>[^ \t\n\r()A-Za-z0-9_$]+)"
)
ESCAPES = {" ": "<SP>", "\t": "<TAB>", "\n": "<NL>", "\r": "<CR>", "(": "<LRB>", ")": "<RRB>"}
# LT opens an escaped "<...>" run; EMPTY stands for the empty string value.
LT, EMPTY = "<LT>", "<EMPTY>"
UNESCAPES = {**{v: k for k, v in ESCAPES.items()}, LT: "<", EMPTY: ""}

LITERAL_PLACEHOLDERS = {"NumberLiteral": NUM, "StringLiteral": STR, "AddressLiteral": ADDR}
_LEXEME_PLACEHOLDERS = {NUMBER: NUM, STRING: STR, ADDRESS: ADDR}
_LITERAL_TOKENS = frozenset(LITERAL_PLACEHOLDERS.values())


@dataclass(frozen=True)
class LengthCaps:
    max_sbt: int = 600
    max_nodes: int = 200
    max_comment: int = 20


# ── Subtokens ────────────────────────────────────────────────────────────────

def _camel_split(word: str) -> List[str]:
    cuts = [0]
    for i in range(1, len(word)):
        prev, cur = word[i - 1], word[i]
        nxt = word[i + 1] if i + 1 < len(word) else ""
        if cur.isupper() and (prev.islower() or prev.isdigit()):
            cuts.append(i)
        elif cur.isupper() and prev.isupper() and nxt.islower():
            cuts.append(i)
    cuts.append(len(word))
    return [word[a:b] for a, b in zip(cuts, cuts[1:]) if b > a]


def subtokenize(identifier: str) -> List[str]:
    """
    Split an identifier at camelCase boundaries and interior underscores.

    A leading underscore stays on the first piece: ``_tokensToSell`` gives
    ``[_tokens, To, Sell]``.  Anything that is not an identifier (``<NUM>``,
    ``0x1f``, ``==``) is returned whole.
    """
    if not _IDENT_RE.match(identifier) or not identifier.strip("_"):
        return [identifier]
    body = identifier.lstrip("_")
    prefix = identifier[: len(identifier) - len(body)]
    pieces: List[str] = []
    for part in body.split("_"):
        if part:
            pieces.extend(_camel_split(part))
    pieces[0] = prefix + pieces[0]
    return pieces


def _word_pieces(word: str) -> List[str]:
    """Subtokens plus one ``_`` joiner for every underscore subtokenize dropped."""
    subs = subtokenize(word)
    out: List[str] = []
    pos = 0
    for sub in subs:
        at = word.index(sub, pos)
        out.extend("_" * (at - pos))
        out.append(sub)
        pos = at + len(sub)
    out.extend("_" * (len(word) - pos))
    return out


def value_pieces(value: str) -> List[str]:
    """SBT rendering of a leaf value; ``"".join(unescape(p))`` gives the value back."""
    if value == "":
        return [EMPTY]
    pieces: List[str] = []
    for m in _VALUE_RE.finditer(value):
        kind = m.lastgroup
        text = m.group(0)
        if kind == "esc":
            pieces.append(ESCAPES[text])
        elif kind == "ph" and text not in _LITERAL_TOKENS:
            pieces.append(LT)
            pieces.extend(_word_pieces(text[1:-1]))
            pieces.append(">")
        elif kind == "word":
            pieces.extend(_word_pieces(text))
        else:
            pieces.append(text)
    return pieces


def join_value_pieces(pieces: Sequence[str]) -> str:
    return "".join(UNESCAPES.get(p, p) for p in pieces)


def value_tokens(value: str) -> List[str]:
    """Graph/code rendering of a leaf value: subtokens and punctuation, no spacing."""
    out: List[str] = []
    for m in _VALUE_RE.finditer(value):
        kind = m.lastgroup
        text = m.group(0)
        if kind == "esc":
            if text in "()":
                out.append(text)
        elif kind == "word":
            out.extend(subtokenize(text))
        else:
            out.append(text)
    return out


# ── Literal normalization ────────────────────────────────────────────────────

def _normalize_raw(text: str) -> str:
    try:
        tokens = tokenize(text)
    except LexError:
        return text
    return " ".join(_LEXEME_PLACEHOLDERS.get(t.kind, t.lexeme) for t in tokens)


def normalize_literals(ast: AstNode) -> AstNode:
    """Copy of ``ast`` with number/string/address literals replaced by placeholders."""
    out = copy.deepcopy(ast)
    for node in out.walk():
        if node.value is None:
            continue
        if node.type_label in LITERAL_PLACEHOLDERS:
            node.value = LITERAL_PLACEHOLDERS[node.type_label]
        elif node.type_label in RAW_TEXT_LABELS:
            node.value = _normalize_raw(node.value)
    return out


# ── SBT ──────────────────────────────────────────────────────────────────────

@dataclass
class SbtSequence:
    tokens: List[str]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.tokens)


def sbt_tokens(ast: AstNode) -> List[str]:
    """Unwrapped, untruncated SBT of ``ast``."""
    out: List[str] = []
    # Stack items are nodes to open, or closing labels (str) to emit.
    stack: List[Union[AstNode, str]] = [ast]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.extend((")", item))
            continue
        out.extend(("(", item.type_label))
        if item.value is not None:
            out.extend(value_pieces(item.value))
        stack.append(item.type_label)
        stack.extend(reversed(item.children))
    return out


def sbt_serialize(ast: AstNode, max_len: int = 600) -> SbtSequence:
    tokens = [START, *sbt_tokens(ast), END]
    if len(tokens) > max_len:
        return SbtSequence(tokens[:max_len], truncated=True)
    return SbtSequence(tokens)


def sbt_parse(seq: Union[SbtSequence, Sequence[str]]) -> AstNode:
    tokens = list(seq.tokens if isinstance(seq, SbtSequence) else seq)
    if tokens and tokens[0] == START:
        tokens = tokens[1:]
    if tokens and tokens[-1] == END:
        tokens = tokens[:-1]
    if not tokens:
        raise SbtFormatError("empty SBT sequence")

    root: Optional[AstNode] = None
    stack: List[Tuple[AstNode, List[str]]] = []
    i, n = 0, len(tokens)
    while i < n:
        tok = tokens[i]
        if tok == "(":
            if i + 1 >= n or tokens[i + 1] in ("(", ")"):
                raise SbtFormatError(f"missing type label after '(' at position {i}")
            node = AstNode(tokens[i + 1])
            if stack:
                parent, pieces = stack[-1]
                if pieces:
                    raise SbtFormatError(f"node {parent.type_label} has both a value and children")
                parent.children.append(node)
            elif root is not None:
                raise SbtFormatError(f"second root at position {i}")
            else:
                root = node
            stack.append((node, []))
            i += 2
        elif tok == ")":
            if not stack:
                raise SbtFormatError(f"unbalanced ')' at position {i}")
            if i + 1 >= n:
                raise SbtFormatError(f"missing closing label at position {i}")
            node, pieces = stack.pop()
            if tokens[i + 1] != node.type_label:
                raise SbtFormatError(
                    f"closing label mismatch at position {i}: opened {node.type_label!r}, closed {tokens[i + 1]!r}"
                )
            if pieces:
                node.value = join_value_pieces(pieces)
            i += 2
        else:
            if not stack:
                raise SbtFormatError(f"token {tok!r} outside any node at position {i}")
            node, pieces = stack[-1]
            if node.children:
                raise SbtFormatError(f"value token {tok!r} after children of {node.type_label}")
            pieces.append(tok)
            i += 1

    if stack:
        raise SbtFormatError(f"unbalanced '(' ({len(stack)} node(s) left open)")
    return assign_ids(root)


# ── Graph ────────────────────────────────────────────────────────────────────

def adjacency_from_edges(n: int, edges: Iterable[Sequence[int]], dtype=np.float64) -> np.ndarray:
    """Ã = A + I for ``n`` nodes and undirected index pairs."""
    adj = np.eye(n, dtype=dtype)
    for pair in edges:
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise SchemaError(f"edge ({i}, {j}) invalid for {n} nodes")
        adj[i, j] = adj[j, i] = 1
    return adj


@dataclass
class GraphRep:
    node_labels: List[str]
    edges: List[Tuple[int, int]] = field(default_factory=list)   # i < j, no self-loops

    @property
    def adjacency(self) -> np.ndarray:
        return adjacency_from_edges(len(self.node_labels), self.edges)

    def neighbors(self, index: int) -> List[int]:
        out = [j for i, j in self.edges if i == index] + [i for i, j in self.edges if j == index]
        return sorted(out)


def graph_extract(ast: AstNode, max_nodes: int = 200) -> GraphRep:
    labels: List[str] = []
    edges: List[Tuple[int, int]] = []
    stack: List[Tuple[AstNode, int]] = [(ast, -1)]

    def add(label: str, parent: int) -> int:
        idx = len(labels)
        labels.append(label)
        if parent >= 0:
            edges.append((parent, idx))
        return idx

    while stack and len(labels) < max_nodes:
        node, parent = stack.pop()
        idx = add(node.type_label, parent)
        if node.value is not None:
            for tok in value_tokens(node.value):
                if len(labels) >= max_nodes:
                    break
                add(tok, idx)
        stack.extend((child, idx) for child in reversed(node.children))
    return GraphRep(labels, edges)


def render_graph(graph: GraphRep) -> str:
    lines = [f"nodes ({len(graph.node_labels)}):"]
    lines += [f"  {i:>3}  {label}" for i, label in enumerate(graph.node_labels)]
    lines.append(f"edges ({len(graph.edges)}):")
    lines += [f"  {i}-{j}" for i, j in graph.edges]
    return "\n".join(lines)


# ── Code tokens ──────────────────────────────────────────────────────────────

# label -> (opening tokens, separator between children, closing tokens)
_STRUCTURE: Dict[str, Tuple[Tuple[str, ...], Optional[str], Tuple[str, ...]]] = {
    "FunctionDefinition": (("function",), None, ()),
    "ModifierDefinition": (("modifier",), None, ()),
    "ParameterList": (("(",), ",", (")",)),
    "ReturnParameters": (("returns", "("), ",", (")",)),
    "ArgumentList": (("(",), ",", (")",)),
    "TupleExpression": (("(",), ",", (")",)),
    "InlineArray": (("[",), ",", ("]",)),
    "Block": (("{",), None, ("}",)),
    "UncheckedBlock": (("unchecked",), None, ()),
    "Mapping": (("mapping", "("), "=>", (")",)),
    "MemberAccess": ((), ".", ()),
    "ExpressionStatement": ((), None, (";",)),
    "VariableDeclarationStatement": ((), None, (";",)),
    "ReturnStatement": (("return",), None, (";",)),
    "EmitStatement": (("emit",), None, (";",)),
    "IfStatement": (("if",), None, ()),
    "WhileStatement": (("while",), None, ()),
    "ForStatement": (("for",), None, ()),
    "DoWhileStatement": (("do",), None, ()),
    "NewExpression": (("new",), None, ()),
}


def _code_stream(ast: AstNode) -> List[str]:
    out: List[str] = []
    stack: List[Union[AstNode, Tuple[str, ...]]] = [ast]
    while stack:
        item = stack.pop()
        if isinstance(item, tuple):
            out.extend(item)
            continue
        if item.value is not None:
            out.extend(value_tokens(item.value))
            if item.type_label == "PlaceholderStatement":
                out.append(";")
            continue
        opening, sep, closing = _STRUCTURE.get(item.type_label, ((), None, ()))
        if item.type_label in ("IndexAccess", "ArrayTypeName") and len(item.children) == 2:
            sep, closing = "[", ("]",)
        out.extend(opening)
        pending: List[Union[AstNode, Tuple[str, ...]]] = [closing]
        for k in range(len(item.children) - 1, -1, -1):
            pending.append(item.children[k])
            if sep is not None and k > 0:
                pending.append((sep,))
        stack.extend(pending)
    return out


def code_tokens(ast: AstNode, max_len: int = 600) -> List[str]:
    tokens = [START, *_code_stream(ast), END]
    return tokens[:max_len]
