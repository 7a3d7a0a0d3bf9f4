"""Tokenizer for `.mj` sources."""

from __future__ import annotations

import re
from dataclasses import dataclass


class MjSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


KEYWORDS = frozenset(
    {
        "class", "extends", "implements", "public", "protected", "static",
        "abstract", "native", "final", "void", "if", "else", "while", "return",
        "throw", "new", "this", "super", "true", "false", "null", "instanceof",
        "snippet", "live", "domain", "in", "int", "boolean",
    }
)

PUNCT = [
    "..", "==", "!=", "<=", ">=", "&&", "||",
    "{", "}", "(", ")", ";", ",", ".", "=", "<", ">", "+", "-", "*", "/", "%", "!", "@",
]


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "string" | "doc" | "kw" | "punct" | "eof"
    text: str
    line: int
    col: int
    start: int  # byte offset into the source string


_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_INT = re.compile(r"[0-9]+")
_WS = re.compile(r"[ \t\r\n]+")

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "0": "\0", "'": "'"}


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    line_start = 0
    n = len(source)

    def advance_lines(text: str, start: int) -> None:
        nonlocal line, line_start
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = start + text.rfind("\n") + 1

    while i < n:
        ch = source[i]
        col = i - line_start + 1
        m = _WS.match(source, i)
        if m:
            advance_lines(m.group(0), i)
            i = m.end()
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise MjSyntaxError("unterminated comment", line, col)
            text = source[i : j + 2]
            if text.startswith("/**") and text != "/**/":
                tokens.append(Token("doc", text, line, col, i))
            advance_lines(text, i)
            i = j + 2
            continue
        if ch == '"':
            j = i + 1
            out = []
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    raise MjSyntaxError("newline in string literal", line, col)
                if source[j] == "\\" and j + 1 < n:
                    esc = source[j + 1]
                    if esc not in _ESCAPES:
                        raise MjSyntaxError(f"bad escape \\{esc}", line, col)
                    out.append(_ESCAPES[esc])
                    j += 2
                    continue
                out.append(source[j])
                j += 1
            if j >= n:
                raise MjSyntaxError("unterminated string literal", line, col)
            tokens.append(Token("string", "".join(out), line, col, i))
            i = j + 1
            continue
        if ch == "'":
            # character literals denote their code point
            j = i + 1
            if j < n and source[j] == "\\" and j + 1 < n and source[j + 1] in _ESCAPES:
                value = _ESCAPES[source[j + 1]]
                j += 2
            elif j < n:
                value = source[j]
                j += 1
            else:
                raise MjSyntaxError("unterminated character literal", line, col)
            if j >= n or source[j] != "'":
                raise MjSyntaxError("unterminated character literal", line, col)
            tokens.append(Token("int", str(ord(value)), line, col, i))
            i = j + 1
            continue
        m = _INT.match(source, i)
        if m:
            tokens.append(Token("int", m.group(0), line, col, i))
            i = m.end()
            continue
        m = _IDENT.match(source, i)
        if m:
            word = m.group(0)
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col, i))
            i = m.end()
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line, col, i))
                i += len(p)
                break
        else:
            raise MjSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, i - line_start + 1, n))
    return tokens
