"""
Comment extraction — turns a raw comment block into NatSpec parts and picks
the summary sentence used as the training target.

Selection priority: @notice > @dev > @return > plain text.  Untagged text in
``///`` and ``/** */`` blocks counts as @notice (NatSpec convention); untagged
text in ``//`` and ``/* */`` comments is plain.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Dict, List, Optional

TAG_PRIORITY = ("@notice", "@dev", "@return")

_TAG_RE = re.compile(r"^(@[A-Za-z]+(?::[A-Za-z_-]+)?)\s*(.*)$")
_SENTENCE_END = re.compile(r"[.!?](?=\s|$)|\n")


@dataclass
class CommentDoc:
    tagged: Dict[str, str] = field(default_factory=dict)
    plain: str = ""

    @property
    def is_empty(self) -> bool:
        return not self.plain.strip() and not any(v.strip() for v in self.tagged.values())


def _comment_lines(lexeme: str) -> tuple[List[str], bool]:
    """Strip comment markers; returns (lines, is_natspec)."""
    if lexeme.startswith("///"):
        return [lexeme[3:]], True
    if lexeme.startswith("//"):
        return [lexeme[2:]], False
    natspec = lexeme.startswith("/**")
    body = lexeme[3:] if natspec else lexeme[2:]
    if body.endswith("*/"):
        body = body[:-2]
    lines = []
    for line in body.split("\n"):
        line = line.strip()
        if line.startswith("*"):
            line = line[1:]
        lines.append(line)
    return lines, natspec


def _split_lexemes(raw_doc: str) -> List[str]:
    """Re-split a newline-joined run of comment lexemes back into lexemes."""
    out: List[str] = []
    current: List[str] = []
    in_block = False
    for line in raw_doc.split("\n"):
        if in_block:
            current.append(line)
            if "*/" in line:
                out.append("\n".join(current))
                current, in_block = [], False
            continue
        stripped = line.strip()
        if stripped.startswith("/*") and "*/" not in stripped[2:]:
            current, in_block = [stripped], True
        elif stripped:
            out.append(stripped)
    if current:
        out.append("\n".join(current))
    return out


def parse_comment_doc(raw_doc: Optional[str]) -> CommentDoc:
    doc = CommentDoc()
    if not raw_doc:
        return doc

    parts: Dict[str, List[str]] = {}
    plain: List[str] = []

    current: Optional[List[str]] = None
    for lexeme in _split_lexemes(raw_doc):
        lines, natspec = _comment_lines(lexeme)
        if not lexeme.startswith("///"):
            current = None   # a tag body only spans consecutive /// lines
        for line in lines:
            text = line.strip()
            m = _TAG_RE.match(text)
            if m:
                tag, body = m.group(1), m.group(2)
                current = parts.setdefault(tag, [])
                if current:
                    current.append("")   # repeated tag starts a new paragraph
                current.append(body)
                continue
            if current is not None:
                current.append(text)
            elif natspec:
                parts.setdefault("@notice", []).append(text)
            else:
                plain.append(text)

    doc.tagged = {tag: _join_wrapped(lines) for tag, lines in parts.items() if _join_wrapped(lines)}
    doc.plain = _join_wrapped(plain)
    return doc


def _join_wrapped(lines: List[str]) -> str:
    """Non-blank lines, newline-separated; ``first_sentence`` stops at the first break."""
    return "\n".join(line for line in lines if line)


# ── Public API ───────────────────────────────────────────────────────────────

def select_comment(doc: CommentDoc) -> Optional[str]:
    for tag in TAG_PRIORITY:
        text = doc.tagged.get(tag, "").strip()
        if text:
            return text
    text = doc.plain.strip()
    return text or None


def first_sentence(text: str) -> str:
    text = text.strip()
    m = _SENTENCE_END.search(text)
    if m is None:
        return text
    if m.group(0) == "\n":
        return text[:m.start()].strip()
    return text[:m.end()].strip()


def comment_tokens(sentence: str) -> List[str]:
    """Lowercase, whitespace-split, strip surrounding punctuation, drop empties."""
    tokens = []
    for word in sentence.lower().split():
        word = word.strip(string.punctuation)
        if word:
            tokens.append(word)
    return tokens
