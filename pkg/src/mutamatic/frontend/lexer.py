from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .ast import SourceSpan


class TokenKind(Enum):
    IDENT = "ident"
    KEYWORD = "keyword"
    INT_LIT = "int"
    FLOAT_LIT = "float"
    STRING_LIT = "string"
    AMPAMP = "&&"
    PIPEPIPE = "||"
    EQEQ = "=="
    NOTEQ = "!="
    LTEQ = "<="
    GTEQ = ">="
    LT = "<"
    GT = ">"
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    PERCENT = "%"
    AMP = "&"
    PIPE = "|"
    BANG = "!"
    ASSIGN = "="
    LPAREN = "("
    RPAREN = ")"
    LBRACE = "{"
    RBRACE = "}"
    COMMA = ","
    SEMI = ";"
    QUESTION = "?"
    COLON = ":"


KEYWORDS = frozenset(
    {
        "int", "float", "bool", "string", "void", "const", "extern",
        "if", "else", "while", "return", "assert", "test",
        "true", "false", "switch", "case", "default",
    }
)

_PUNCT = sorted(
    (k for k in TokenKind if k.value[0] in "&|=!<>+-*/%(){},;?:"),
    key=lambda k: -len(k.value),
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>{punct})
    """.replace("{punct}", "|".join(re.escape(k.value) for k in _PUNCT)),
    re.VERBOSE,
)

_PUNCT_BY_TEXT = {k.value: k for k in _PUNCT}
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan
    value: Optional[Union[int, float, str]] = None

    def __repr__(self):
        return f"Token({self.kind.name}, {self.text!r}, {self.span.begin}..{self.span.end})"


class LexError(Exception):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{span.file_id}:{span.begin}: {message}")
        self.span = span
        self.message = message


class ByteOffsets:
    """Maps character indices of a str to UTF-8 byte offsets."""

    def __init__(self, text: str):
        if text.isascii():
            self._table = None
        else:
            table = [0]
            for ch in text:
                table.append(table[-1] + len(ch.encode("utf-8")))
            self._table = table

    def __call__(self, index: int) -> int:
        return index if self._table is None else self._table[index]


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str, file_id: str = "<input>") -> list[Token]:
    offsets = ByteOffsets(source)
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            span = SourceSpan(file_id, offsets(pos), offsets(pos + 1))
            raise LexError(span, f"illegal character {source[pos]!r}")
        group = m.lastgroup
        text = m.group()
        pos = m.end()
        if group in ("ws", "comment"):
            continue
        span = SourceSpan(file_id, offsets(m.start()), offsets(m.end()))
        if group == "ident":
            kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, text, span))
        elif group == "int":
            tokens.append(Token(TokenKind.INT_LIT, text, span, int(text)))
        elif group == "float":
            tokens.append(Token(TokenKind.FLOAT_LIT, text, span, float(text)))
        elif group == "string":
            tokens.append(Token(TokenKind.STRING_LIT, text, span, _unescape(text[1:-1])))
        else:
            tokens.append(Token(_PUNCT_BY_TEXT[text], text, span))
    return tokens
