"""
Tolerant Solidity parser — builds typed/valued ASTs for contracts and methods.

Contract-level structure (contract / function / modifier headers and brace
balance) must be well formed, otherwise ParseError is raised.  Inside method
bodies the parser is forgiving: a statement it cannot understand becomes a
``Statement`` leaf carrying the raw token text instead of aborting the file.

The label vocabulary is documented in docs/ast-labels.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

from .errors import ParseError, TreeError
from .solidity_lexer import (
    ADDRESS, ELEMENTARY_TYPE_RE, IDENTIFIER, KEYWORD, NUMBER, PUNCT, STRING,
    Token, code_tokens_only, tokenize,
)


# ── Data structures ──────────────────────────────────────────────────────────

@dataclass
class AstNode:
    """Ordered tree node.  Equality is structural: label, value and children."""
    type_label: str
    value: Optional[str] = None
    children: List["AstNode"] = field(default_factory=list)
    id: int = field(default=0, compare=False)
    span: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["AstNode"]:
        """Pre-order traversal (iterative, safe on deep expression trees)."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def child(self, type_label: str) -> Optional["AstNode"]:
        return next((c for c in self.children if c.type_label == type_label), None)

    def size(self) -> int:
        return sum(1 for _ in self.walk())


@dataclass
class SourceUnit:
    path: str
    raw: str
    pragma: Optional[str] = None


def load_source_unit(path: Path) -> SourceUnit:
    raw = Path(path).read_text(encoding="utf-8")
    m = re.search(r"pragma\s+solidity\s+([^;]+);", raw)
    return SourceUnit(path=str(path), raw=raw, pragma=m.group(1).strip() if m else None)


def assign_ids(root: AstNode) -> AstNode:
    for i, node in enumerate(root.walk()):
        node.id = i
    return root


def validate_tree(root: AstNode) -> None:
    """Check single-parent / acyclic / leaf-value / unique-id invariants."""
    seen_objects = set()
    seen_ids = set()
    for node in root.walk():
        if id(node) in seen_objects:
            raise TreeError(f"node {node.type_label}#{node.id} reachable twice (shared or cyclic)")
        seen_objects.add(id(node))
        if node.id in seen_ids:
            raise TreeError(f"duplicate node id {node.id}")
        seen_ids.add(node.id)
        if node.value is not None and node.children:
            raise TreeError(f"node {node.type_label}#{node.id} has both a value and children")
        if not node.type_label:
            raise TreeError(f"node #{node.id} has an empty type label")


# ── Parser ───────────────────────────────────────────────────────────────────

VISIBILITY = {"public", "private", "internal", "external"}
MUTABILITY = {"pure", "view", "payable", "constant"}
STORAGE = {"memory", "storage", "calldata"}
UNITS = {"wei", "gwei", "ether", "seconds", "minutes", "hours", "days", "weeks", "years"}
METHOD_KEYWORDS = {"function", "modifier", "constructor", "fallback", "receive"}
MEMBER_LABELS = {
    "event": "EventDefinition",
    "struct": "StructDefinition",
    "enum": "EnumDefinition",
    "using": "UsingForDirective",
    "error": "ErrorDefinition",
}
# Leaves whose value is space-joined raw token text rather than a single lexeme.
RAW_TEXT_LABELS = frozenset({
    "Statement", "StateVariableDeclaration", "PragmaDirective", "ImportDirective",
    "InheritanceSpecifier", *MEMBER_LABELS.values(),
})

ASSIGN_OPS = {"=", "|=", "^=", "&=", "<<=", ">>=", "+=", "-=", "*=", "/=", "%="}
BINARY_LEVELS = [
    {"||"},
    {"&&"},
    {"==", "!="},
    {"<", ">", "<=", ">="},
    {"|"},
    {"^"},
    {"&"},
    {"<<", ">>"},
    {"+", "-"},
    {"*", "/", "%"},
]
PREFIX_OPS = {"!", "~", "-", "+", "++", "--", "delete"}


class _Degrade(Exception):
    """Raised inside a method body when a statement should fall back to raw text."""


class SolidityParser:
    """
    Recursive-descent parser over the non-comment tokens of one file.

    Usage
    -----
    root = SolidityParser(tokens).parse()
    """

    def __init__(self, tokens: List[Token]):
        self.tokens = code_tokens_only(tokens)
        self.pos = 0

    # ── Public API ───────────────────────────────────────────────────────────

    def parse(self) -> AstNode:
        if not self.tokens:
            raise ParseError("empty token stream")
        first = self.tokens[0]
        root = AstNode("SourceUnit", span=(first.span[0], self.tokens[-1].span[1]))
        while not self._at_end():
            root.children.append(self._source_element())
        return assign_ids(root)

    # ── Token helpers ────────────────────────────────────────────────────────

    def _at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def _peek(self, offset: int = 0) -> Optional[Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def _is(self, lexeme: str, offset: int = 0) -> bool:
        tok = self._peek(offset)
        return tok is not None and tok.lexeme == lexeme and tok.kind in (PUNCT, KEYWORD, IDENTIFIER)

    def _next(self) -> Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1].span[1]
            raise ParseError("unexpected end of input (unbalanced braces?)", (last, last))
        self.pos += 1
        return tok

    def _expect(self, lexeme: str, context: str) -> Token:
        tok = self._peek()
        if tok is None or tok.lexeme != lexeme:
            span = tok.span if tok else (self.tokens[-1].span[1],) * 2
            found = tok.lexeme if tok else "end of input"
            raise ParseError(f"expected '{lexeme}' in {context}, found '{found}'", span)
        self.pos += 1
        return tok

    def _span_from(self, start: int) -> Tuple[int, int]:
        end_tok = self.tokens[max(self.pos - 1, start)]
        return (self.tokens[start].span[0], end_tok.span[1])

    def _raw_text(self, start: int, end: int) -> str:
        return " ".join(t.lexeme for t in self.tokens[start:end])

    def _skip_raw(self) -> int:
        """Consume up to a depth-0 ';' or the end of a depth-0 brace group."""
        depth = 0
        while True:
            tok = self._peek()
            if tok is None:
                self._next()  # raises ParseError
            if tok.kind == PUNCT and tok.lexeme in "([{":
                depth += 1
            elif tok.kind == PUNCT and tok.lexeme in ")]}":
                if depth == 0:
                    return self.pos   # leave the unmatched closer to the caller
                depth -= 1
                if depth == 0 and tok.lexeme == "}":
                    self.pos += 1
                    if self._is(";"):
                        self.pos += 1
                        return self.pos
                    # `x.call{value: v}(data)` keeps going after the brace group.
                    if not (self._is("(") or self._is(".") or self._is("[")):
                        return self.pos
                    continue
            elif tok.lexeme == ";" and depth == 0:
                self.pos += 1
                return self.pos
            self.pos += 1

    # ── File / contract level ────────────────────────────────────────────────

    def _source_element(self) -> AstNode:
        tok = self._peek()
        start = self.pos
        if tok.lexeme == "pragma":
            self._skip_raw()
            return AstNode("PragmaDirective", self._raw_text(start + 1, self.pos - 1) or "pragma",
                           span=self._span_from(start))
        if tok.lexeme == "import":
            # `import {A} from "x";` has a brace group that does not end the directive.
            while self._next().lexeme != ";":
                pass
            return AstNode("ImportDirective", self._raw_text(start, self.pos), span=self._span_from(start))
        if tok.lexeme in ("contract", "interface", "library", "abstract"):
            return self._contract()
        if tok.lexeme in METHOD_KEYWORDS:
            return self._method()
        if tok.kind == PUNCT and tok.lexeme in ")]}":
            raise ParseError(f"unbalanced '{tok.lexeme}' at file level", tok.span)
        label = MEMBER_LABELS.get(tok.lexeme, "StateVariableDeclaration")
        self._skip_raw()
        return AstNode(label, self._raw_text(start, self.pos), span=self._span_from(start))

    def _contract(self) -> AstNode:
        start = self.pos
        node = AstNode("ContractDefinition")
        kind = self._next().lexeme
        if kind == "abstract":
            kind = "abstract " + self._expect("contract", "abstract contract header").lexeme
        name_tok = self._peek()
        if name_tok is None or name_tok.kind != IDENTIFIER:
            raise ParseError("contract header without a name", (name_tok or self.tokens[start]).span)
        self.pos += 1
        node.children.append(AstNode("SimpleName", name_tok.lexeme))
        node.children.append(AstNode("ContractKind", kind))

        if self._is("is"):
            self.pos += 1
            while True:
                base_start = self.pos
                depth = 0
                while True:
                    tok = self._next()
                    if tok.lexeme == "(":
                        depth += 1
                    elif tok.lexeme == ")":
                        depth -= 1
                    nxt = self._peek()
                    if depth == 0 and nxt is not None and nxt.lexeme in (",", "{"):
                        break
                if self.pos == base_start:
                    raise ParseError("empty inheritance specifier", self.tokens[base_start].span)
                node.children.append(AstNode("InheritanceSpecifier", self._raw_text(base_start, self.pos)))
                if self._is(","):
                    self.pos += 1
                    continue
                break

        self._expect("{", "contract header")
        while not self._is("}"):
            if self._at_end():
                self._next()
            node.children.append(self._member())
        self._expect("}", "contract body")
        node.span = self._span_from(start)
        return node

    def _member(self) -> AstNode:
        tok = self._peek()
        if tok.lexeme in METHOD_KEYWORDS:
            return self._method()
        start = self.pos
        label = MEMBER_LABELS.get(tok.lexeme, "StateVariableDeclaration")
        self._skip_raw()
        if self.pos == start:
            raise ParseError(f"unexpected '{tok.lexeme}' in contract body", tok.span)
        return AstNode(label, self._raw_text(start, self.pos), span=self._span_from(start))

    # ── Methods ──────────────────────────────────────────────────────────────

    def _method(self) -> AstNode:
        start = self.pos
        head = self._next()

        if head.lexeme == "modifier":
            node = AstNode("ModifierDefinition")
            name = self._next()
            if name.kind != IDENTIFIER:
                raise ParseError("modifier header without a name", name.span)
            node.children.append(AstNode("SimpleName", name.lexeme))
            if self._is("("):
                node.children.append(self._parameter_list("ParameterList"))
        else:
            node = AstNode("FunctionDefinition")
            if head.lexeme in ("constructor", "fallback", "receive"):
                node.children.append(AstNode("SimpleName", head.lexeme))
            elif self._peek() is not None and self._peek().kind in (IDENTIFIER, KEYWORD) and not self._is("("):
                node.children.append(AstNode("SimpleName", self._next().lexeme))
            if not self._is("("):
                tok = self._peek() or head
                raise ParseError("function header without a parameter list", tok.span)
            node.children.append(self._parameter_list("ParameterList"))

        self._header_items(node)

        if self._is(";"):
            self.pos += 1
        elif self._is("{"):
            node.children.append(self._block())
        else:
            tok = self._peek() or head
            raise ParseError(f"malformed method header near '{tok.lexeme}'", tok.span)
        node.span = self._span_from(start)
        return node

    def _header_items(self, node: AstNode) -> None:
        while True:
            tok = self._peek()
            if tok is None:
                self._next()
            lex = tok.lexeme
            if lex in ("{", ";"):
                return
            if lex in VISIBILITY:
                self.pos += 1
                node.children.append(AstNode("Visibility", lex))
            elif lex in MUTABILITY:
                self.pos += 1
                node.children.append(AstNode("StateMutability", lex))
            elif lex == "virtual":
                self.pos += 1
                node.children.append(AstNode("Virtual", lex))
            elif lex == "override":
                self.pos += 1
                if self._is("("):
                    self._balanced("(", ")")
                node.children.append(AstNode("OverrideSpecifier", lex))
            elif lex == "returns":
                self.pos += 1
                node.children.append(self._parameter_list("ReturnParameters"))
            elif tok.kind == IDENTIFIER:
                self.pos += 1
                inv = AstNode("ModifierInvocation", children=[AstNode("Identifier", lex)])
                if self._is("("):
                    inv.children.append(self._strict(self._arguments))
                node.children.append(inv)
            else:
                raise ParseError(f"unexpected '{lex}' in method header", tok.span)

    def _balanced(self, open_: str, close: str) -> None:
        self._expect(open_, "balanced group")
        depth = 1
        while depth:
            tok = self._next()
            if tok.lexeme == open_:
                depth += 1
            elif tok.lexeme == close:
                depth -= 1

    def _strict(self, fn):
        """Run a body-level sub-parser where degradation is not allowed."""
        start = self.pos
        try:
            return fn()
        except _Degrade:
            tok = self.tokens[min(self.pos, len(self.tokens) - 1)]
            raise ParseError("malformed method header", (self.tokens[start].span[0], tok.span[1]))

    def _parameter_list(self, label: str) -> AstNode:
        self._expect("(", label)
        node = AstNode(label)
        while not self._is(")"):
            if self._at_end():
                self._next()
            node.children.append(self._strict(self._parameter))
            if self._is(","):
                self.pos += 1
            elif not self._is(")"):
                tok = self._peek()
                raise ParseError(f"unexpected '{tok.lexeme}' in {label}", tok.span)
        self._expect(")", label)
        return node

    def _parameter(self) -> AstNode:
        node = AstNode("Parameter", children=[self._type_name()])
        while self._peek() is not None and self._peek().lexeme in STORAGE | {"indexed"}:
            tok = self._next()
            if tok.lexeme != "indexed":
                node.children.append(AstNode("StorageLocation", tok.lexeme))
        tok = self._peek()
        if tok is not None and tok.kind == IDENTIFIER:
            self.pos += 1
            node.children.append(AstNode("SimpleName", tok.lexeme))
        return node

    # ── Types ────────────────────────────────────────────────────────────────

    def _type_name(self) -> AstNode:
        tok = self._peek()
        if tok is None:
            raise _Degrade()
        if tok.lexeme == "mapping":
            self.pos += 1
            self._require("(")
            key = self._type_name()
            if self._peek() is not None and self._peek().kind == IDENTIFIER:
                self.pos += 1
            self._require("=>")
            val = self._type_name()
            if self._peek() is not None and self._peek().kind == IDENTIFIER:
                self.pos += 1
            self._require(")")
            base = AstNode("Mapping", children=[key, val])
        elif tok.kind == KEYWORD and ELEMENTARY_TYPE_RE.match(tok.lexeme):
            self.pos += 1
            value = tok.lexeme
            if value == "address" and self._is("payable"):
                self.pos += 1
                value = "address payable"
            base = AstNode("ElementaryTypeName", value)
        elif tok.kind == IDENTIFIER:
            self.pos += 1
            parts = [tok.lexeme]
            while self._is(".") and self._peek(1) is not None and self._peek(1).kind == IDENTIFIER:
                parts.append(self.tokens[self.pos + 1].lexeme)
                self.pos += 2
            base = AstNode("UserDefinedTypeName", ".".join(parts))
        else:
            raise _Degrade()
        while self._is("["):
            self.pos += 1
            arr = AstNode("ArrayTypeName", children=[base])
            if not self._is("]"):
                arr.children.append(self._expression())
            self._require("]")
            base = arr
        return base

    def _require(self, lexeme: str) -> Token:
        tok = self._peek()
        if tok is None or tok.lexeme != lexeme:
            raise _Degrade()
        self.pos += 1
        return tok

    # ── Statements ───────────────────────────────────────────────────────────

    def _block(self) -> AstNode:
        start = self.pos
        self._expect("{", "block")
        node = AstNode("Block")
        while not self._is("}"):
            if self._at_end():
                self._next()
            node.children.append(self._statement())
        self._expect("}", "block")
        node.span = self._span_from(start)
        return node

    def _statement(self) -> AstNode:
        start = self.pos
        try:
            stmt = self._statement_strict()
        except _Degrade:
            self.pos = start
            self._skip_raw()
            if self.pos == start:
                # Stray closer inside a body: keep it as raw text and move on.
                self._next()
            stmt = AstNode("Statement", self._raw_text(start, self.pos))
        stmt.span = self._span_from(start)
        return stmt

    def _statement_strict(self) -> AstNode:
        tok = self._peek()
        if tok is None:
            self._next()
        lex = tok.lexeme

        if lex == "{" and tok.kind == PUNCT:
            return self._block()
        if lex == ";":
            self.pos += 1
            return AstNode("EmptyStatement")
        if tok.kind == KEYWORD:
            if lex == "if":
                self.pos += 1
                self._require("(")
                cond = self._expression()
                self._require(")")
                node = AstNode("IfStatement", children=[cond, self._statement()])
                if self._is("else"):
                    self.pos += 1
                    node.children.append(self._statement())
                return node
            if lex == "while":
                self.pos += 1
                self._require("(")
                cond = self._expression()
                self._require(")")
                return AstNode("WhileStatement", children=[cond, self._statement()])
            if lex == "do":
                self.pos += 1
                body = self._statement()
                self._require("while")
                self._require("(")
                cond = self._expression()
                self._require(")")
                self._require(";")
                return AstNode("DoWhileStatement", children=[body, cond])
            if lex == "for":
                return self._for()
            if lex == "return":
                self.pos += 1
                node = AstNode("ReturnStatement")
                if not self._is(";"):
                    node.children.append(self._expression())
                self._require(";")
                return node
            if lex == "emit":
                self.pos += 1
                node = AstNode("EmitStatement", children=[self._expression()])
                self._require(";")
                return node
            if lex in ("break", "continue", "throw"):
                self.pos += 1
                self._require(";")
                return AstNode(lex.capitalize() + "Statement", lex)
            if lex == "unchecked":
                self.pos += 1
                if not self._is("{"):
                    raise _Degrade()
                return AstNode("UncheckedBlock", children=[self._block()])
            if lex in ("assembly", "try"):
                raise _Degrade()
        if lex == "_" and self._is(";", 1):
            self.pos += 2
            return AstNode("PlaceholderStatement", "_")
        if self._looks_like_declaration():
            node = self._variable_declaration()
            self._require(";")
            return node
        node = AstNode("ExpressionStatement", children=[self._expression()])
        self._require(";")
        return node

    def _for(self) -> AstNode:
        self.pos += 1
        self._require("(")
        node = AstNode("ForStatement")
        if self._is(";"):
            self.pos += 1
            node.children.append(AstNode("EmptyStatement"))
        elif self._looks_like_declaration():
            node.children.append(self._variable_declaration())
            self._require(";")
        else:
            node.children.append(AstNode("ExpressionStatement", children=[self._expression()]))
            self._require(";")
        if self._is(";"):
            node.children.append(AstNode("EmptyStatement"))
        else:
            node.children.append(self._expression())
        self._require(";")
        if self._is(")"):
            node.children.append(AstNode("EmptyStatement"))
        else:
            node.children.append(self._expression())
        self._require(")")
        node.children.append(self._statement())
        return node

    def _looks_like_declaration(self) -> bool:
        tok = self._peek()
        if tok is None:
            return False
        if tok.lexeme == "mapping":
            return True
        if tok.kind == KEYWORD and ELEMENTARY_TYPE_RE.match(tok.lexeme):
            return not self._is("(", 1) and not self._is(".", 1)
        if tok.kind != IDENTIFIER:
            return False
        i = 1
        while self._is(".", i) and self._peek(i + 1) is not None and self._peek(i + 1).kind == IDENTIFIER:
            i += 2
        while self._is("[", i):
            depth = 0
            while True:
                t = self._peek(i)
                if t is None:
                    return False
                if t.lexeme == "[":
                    depth += 1
                elif t.lexeme == "]":
                    depth -= 1
                i += 1
                if depth == 0:
                    break
        nxt = self._peek(i)
        return nxt is not None and (nxt.kind == IDENTIFIER or nxt.lexeme in STORAGE)

    def _variable_declaration(self) -> AstNode:
        node = AstNode("VariableDeclarationStatement", children=[self._type_name()])
        if self._peek() is not None and self._peek().lexeme in STORAGE:
            node.children.append(AstNode("StorageLocation", self._next().lexeme))
        name = self._peek()
        if name is None or name.kind != IDENTIFIER:
            raise _Degrade()
        self.pos += 1
        node.children.append(AstNode("SimpleName", name.lexeme))
        if self._is("="):
            self.pos += 1
            node.children.append(self._expression())
        return node

    # ── Expressions ──────────────────────────────────────────────────────────

    def _expression(self) -> AstNode:
        lhs = self._conditional()
        tok = self._peek()
        if tok is not None and tok.kind == PUNCT and tok.lexeme in ASSIGN_OPS:
            self.pos += 1
            rhs = self._expression()
            return AstNode("Assignment", children=[lhs, AstNode("Operator", tok.lexeme), rhs])
        return lhs

    def _conditional(self) -> AstNode:
        cond = self._binary(0)
        if self._is("?"):
            self.pos += 1
            then = self._expression()
            self._require(":")
            other = self._expression()
            return AstNode("Conditional", children=[cond, then, other])
        return cond

    def _binary(self, level: int) -> AstNode:
        if level >= len(BINARY_LEVELS):
            return self._power()
        lhs = self._binary(level + 1)
        while True:
            tok = self._peek()
            if tok is None or tok.kind != PUNCT or tok.lexeme not in BINARY_LEVELS[level]:
                return lhs
            self.pos += 1
            rhs = self._binary(level + 1)
            lhs = AstNode("BinaryOperation", children=[lhs, AstNode("Operator", tok.lexeme), rhs])

    def _power(self) -> AstNode:
        base = self._unary()
        if self._is("**"):
            self.pos += 1
            exponent = self._power()
            return AstNode("BinaryOperation", children=[base, AstNode("Operator", "**"), exponent])
        return base

    def _unary(self) -> AstNode:
        tok = self._peek()
        if tok is not None and tok.lexeme in PREFIX_OPS and tok.kind in (PUNCT, KEYWORD):
            self.pos += 1
            return AstNode("UnaryOperation", children=[AstNode("Operator", tok.lexeme), self._unary()])
        return self._postfix(self._primary())

    def _postfix(self, expr: AstNode) -> AstNode:
        while True:
            tok = self._peek()
            if tok is None or tok.kind != PUNCT:
                return expr
            if tok.lexeme == ".":
                self.pos += 1
                name = self._peek()
                if name is None or name.kind not in (IDENTIFIER, KEYWORD):
                    raise _Degrade()
                self.pos += 1
                expr = AstNode("MemberAccess", children=[expr, AstNode("MemberName", name.lexeme)])
            elif tok.lexeme == "[":
                self.pos += 1
                node = AstNode("IndexAccess", children=[expr])
                if not self._is("]"):
                    node.children.append(self._expression())
                self._require("]")
                expr = node
            elif tok.lexeme == "(":
                expr = AstNode("FunctionCall", children=[expr, self._arguments()])
            elif tok.lexeme in ("++", "--"):
                self.pos += 1
                expr = AstNode("UnaryOperation", children=[expr, AstNode("Operator", tok.lexeme)])
            else:
                return expr

    def _arguments(self) -> AstNode:
        self._require("(")
        node = AstNode("ArgumentList")
        while not self._is(")"):
            node.children.append(self._expression())
            if self._is(","):
                self.pos += 1
            elif not self._is(")"):
                raise _Degrade()
        self._require(")")
        return node

    def _primary(self) -> AstNode:
        tok = self._peek()
        if tok is None:
            raise _Degrade()
        kind, lex = tok.kind, tok.lexeme

        if kind == NUMBER:
            self.pos += 1
            lit = AstNode("NumberLiteral", lex)
            unit = self._peek()
            if unit is not None and unit.lexeme in UNITS:
                self.pos += 1
                return AstNode("NumberUnit", children=[lit, AstNode("Unit", unit.lexeme)])
            return lit
        if kind == ADDRESS:
            self.pos += 1
            return AstNode("AddressLiteral", lex)
        if kind == STRING:
            self.pos += 1
            parts = [lex]
            while self._peek() is not None and self._peek().kind == STRING:
                parts.append(self._next().lexeme)
            return AstNode("StringLiteral", " ".join(parts))
        if kind == IDENTIFIER:
            self.pos += 1
            if lex in ("hex", "unicode") and self._peek() is not None and self._peek().kind == STRING:
                return AstNode("StringLiteral", lex + self._next().lexeme)
            return AstNode("Identifier", lex)
        if kind == KEYWORD:
            if lex in ("true", "false"):
                self.pos += 1
                return AstNode("BooleanLiteral", lex)
            if lex == "new":
                self.pos += 1
                return AstNode("NewExpression", children=[self._type_name()])
            if ELEMENTARY_TYPE_RE.match(lex) or lex in ("payable", "type"):
                self.pos += 1
                return AstNode("ElementaryTypeName", lex)
            raise _Degrade()
        if lex in ("(", "["):
            close = ")" if lex == "(" else "]"
            self.pos += 1
            items: List[AstNode] = []
            commas = 0
            while not self._is(close):
                if self._is(","):
                    self.pos += 1
                    commas += 1
                    continue
                items.append(self._expression())
                if not (self._is(",") or self._is(close)):
                    raise _Degrade()
            self._require(close)
            if lex == "(" and commas == 0 and len(items) == 1:
                return items[0]
            return AstNode("TupleExpression" if lex == "(" else "InlineArray", children=items)
        raise _Degrade()


def parse(tokens: List[Token]) -> AstNode:
    return SolidityParser(tokens).parse()


def parse_source(source: str) -> AstNode:
    return parse(tokenize(source))
