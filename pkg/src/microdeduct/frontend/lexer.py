"""Tokenizer for MicroC source with ``/*@ ... */`` annotation blocks."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import Diagnostic, FrontendError, Span

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<annot_start>/\*@)
  | (?P<annot_end>\*/)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<float>\d+\.\d*|\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<builtin>\\[A-Za-z_]+)
  | (?P<op><==>|==>|==|!=|<=|>=|&&|\|\||\+\+|--|\+=|-=|\*=|->|[-+*/%<>=!&|(){};,\[\].?:~^])
  | (?P<at>@)
    """,
    re.VERBOSE | re.DOTALL,
)

PROVENANCE_TAGS = {"functional": "functional", "auxiliary": "auxiliary"}


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | builtin | op | annot_start | annot_end | prov | float | eof
    text: str
    span: Span


def tokenize(source: str) -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    in_annot = False
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        span = Span(line, pos - line_start + 1)
        if m is None:
            raise FrontendError(
                [Diagnostic("error", span, f"unexpected character {source[pos]!r}", "parse")]
            )
        kind = m.lastgroup
        text = m.group()
        if kind == "annot_start":
            if in_annot:
                raise FrontendError([Diagnostic("error", span, "nested annotation", "parse")])
            in_annot = True
            tokens.append(Token(kind, text, span))
        elif kind == "annot_end":
            if not in_annot:
                raise FrontendError([Diagnostic("error", span, "stray '*/'", "parse")])
            in_annot = False
            tokens.append(Token(kind, text, span))
        elif kind == "line_comment":
            tag = text[2:].strip().lower()
            if in_annot and tag in PROVENANCE_TAGS:
                tokens.append(Token("prov", PROVENANCE_TAGS[tag], span))
        elif kind == "block_comment":
            if in_annot:
                raise FrontendError([Diagnostic("error", span, "comment inside annotation", "parse")])
        elif kind == "at":
            if not in_annot:
                raise FrontendError([Diagnostic("error", span, "unexpected '@'", "parse")])
        elif kind != "ws":
            tokens.append(Token(kind, text, span))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    if in_annot:
        raise FrontendError([Diagnostic("error", Span(line, pos - line_start + 1), "unterminated annotation", "parse")])
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens
