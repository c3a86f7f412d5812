"""MiniC lexer, parser and pretty-printer."""

from .ast import SourceSpan
from .lexer import LexError, Token, TokenKind, tokenize
from .parser import ParseError, parse, parse_source
from .printer import pretty_print, print_expr

__all__ = [
    "LexError",
    "ParseError",
    "SourceSpan",
    "Token",
    "TokenKind",
    "parse",
    "parse_source",
    "pretty_print",
    "print_expr",
    "tokenize",
]
