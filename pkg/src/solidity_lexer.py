"""
Solidity lexer — turns source text into a lossless token stream.

Whitespace is not a token; it is recorded on the following token
(``leading``) and, after the last token, on that token's ``trailing``
field, so ``untokenize(tokenize(src)) == src``.  Comments are kept as
tokens because method documentation is attached from them later.

Token kinds:
  keyword | identifier | number | string | address | punctuation
  doc-comment | line-comment | block-comment
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Tuple

from .errors import LexError

KEYWORD = "keyword"
IDENTIFIER = "identifier"
NUMBER = "number"
STRING = "string"
ADDRESS = "address"
PUNCT = "punctuation"
DOC_COMMENT = "doc-comment"
LINE_COMMENT = "line-comment"
BLOCK_COMMENT = "block-comment"

COMMENT_KINDS = frozenset({DOC_COMMENT, LINE_COMMENT, BLOCK_COMMENT})

ELEMENTARY_TYPE_RE = re.compile(
    r"^(address|bool|string|bytes([1-9]|[12][0-9]|3[0-2])?|u?int(8|16|24|32|40|48|56|64|72|80|88|96|"
    r"104|112|120|128|136|144|152|160|168|176|184|192|200|208|216|224|232|240|248|256)?|byte|var|"
    r"u?fixed([0-9]+x[0-9]+)?)$"
)

# "from" is only meaningful inside import directives, which are kept as raw text,
# so it lexes as an identifier and stays usable as a parameter or variable name.
KEYWORDS = frozenset({
    "pragma", "import", "as", "contract", "interface", "library", "abstract", "is",
    "function", "modifier", "constructor", "fallback", "receive", "event", "struct", "enum",
    "error", "using", "for", "mapping", "returns", "return", "public", "private", "internal",
    "external", "pure", "view", "payable", "constant", "immutable", "virtual", "override",
    "memory", "storage", "calldata", "if", "else", "while", "do", "break", "continue", "emit",
    "new", "delete", "true", "false", "unchecked", "try", "catch", "assembly", "throw",
    "indexed", "anonymous", "type", "wei", "gwei", "ether", "seconds", "minutes", "hours",
    "days", "weeks", "years",
})

# Order matters: comments before "/" punctuation, address before number.
_TOKEN_SPEC: List[Tuple[str, str]] = [
    (DOC_COMMENT,   r"///[^\n]*|/\*\*(?!/).*?\*/"),
    (LINE_COMMENT,  r"//[^\n]*"),
    (BLOCK_COMMENT, r"/\*.*?\*/"),
    (ADDRESS,       r"0x[0-9a-fA-F]{40}(?![0-9a-fA-F_])"),
    (NUMBER,        r"0x[0-9a-fA-F_]+|(?:\d[\d_]*(?:\.\d[\d_]*)?|\.\d[\d_]*)(?:[eE]-?\d+)?"),
    (STRING,        r'"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\''),
    ("word",        r"[A-Za-z_$][A-Za-z0-9_$]*"),
    (PUNCT,         r">>>=|>>=|<<=|\*\*|\+\+|--|&&|\|\||==|!=|<=|>=|<<|>>|\+=|-=|\*=|/=|%=|\|=|&=|\^=|=>|->|:="
                    r"|[(){}\[\];,.=<>!+\-*/%&|^~?:@#]"),
]
_MASTER = re.compile("|".join(f"(?P<g{i}>{pat})" for i, (_, pat) in enumerate(_TOKEN_SPEC)), re.S)
_WS = re.compile(r"\s+")


@dataclass
class Token:
    kind: str
    lexeme: str
    span: Tuple[int, int]          # byte offsets, end exclusive
    leading: str = ""              # whitespace before this token
    trailing: str = ""             # only set on the final token

    @property
    def is_comment(self) -> bool:
        return self.kind in COMMENT_KINDS


class TokenList(list):
    """Token list that also keeps whitespace found when there is no token to carry it."""

    trailing: str = ""


def _bytes(text: str) -> int:
    return len(text.encode("utf-8"))


def tokenize(source: str) -> TokenList:
    """Lex ``source``; raises LexError on an unterminated string or block comment."""
    tokens = TokenList()
    pos = 0
    byte_pos = 0
    n = len(source)
    pending_ws = ""

    while pos < n:
        ws = _WS.match(source, pos)
        if ws:
            pending_ws = ws.group(0)
            byte_pos += _bytes(pending_ws)
            pos = ws.end()
            if pos >= n:
                break

        if source.startswith("/*", pos) and source.find("*/", pos + 2) < 0:
            raise LexError("unterminated block comment", byte_pos)

        m = _MASTER.match(source, pos)
        if m is None:
            ch = source[pos]
            if ch in "\"'":
                raise LexError("unterminated string literal", byte_pos)
            # Unknown characters become single-character punctuation.
            lexeme, kind = ch, PUNCT
        else:
            lexeme = m.group(0)
            kind = _TOKEN_SPEC[int(m.lastgroup[1:])][0]
            if kind == "word":
                kind = KEYWORD if (lexeme in KEYWORDS or ELEMENTARY_TYPE_RE.match(lexeme)) else IDENTIFIER

        size = _bytes(lexeme)
        tokens.append(Token(kind, lexeme, (byte_pos, byte_pos + size), leading=pending_ws))
        pending_ws = ""
        byte_pos += size
        pos += len(lexeme)

    if tokens and pending_ws:
        tokens[-1].trailing = pending_ws
    elif pending_ws:
        tokens.trailing = pending_ws
    return tokens


def untokenize(tokens: List[Token]) -> str:
    """Inverse of ``tokenize``."""
    if not tokens:
        return getattr(tokens, "trailing", "")
    return "".join(t.leading + t.lexeme + t.trailing for t in tokens)


def code_tokens_only(tokens: List[Token]) -> List[Token]:
    return [t for t in tokens if not t.is_comment]
