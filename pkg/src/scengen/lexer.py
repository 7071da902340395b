"""Indentation-aware lexer for scenario sources.

Multi-word operator and specifier heads ("left of", "offset along", "can
see", ...) are lexed as sequences of keyword tokens and disambiguated by the
parser.  Block structure is indentation-based with explicit INDENT/DEDENT
tokens.  A logical line continues onto the next physical line after a
trailing backslash, a trailing comma, or inside an open bracket.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexError, Span

KEYWORDS = frozenset("""
    import class def return for if else param require mutate
    not and or is in
    True False None
    at offset along by left right of ahead behind beyond from visible on
    following facing toward away apparently with relative to deg can see
    distance angle front back follow ego self
""".split())

NAME = "NAME"
NUMBER = "NUMBER"
STRING = "STRING"
KW = "KW"
OP = "OP"
NEWLINE = "NEWLINE"
INDENT = "INDENT"
DEDENT = "DEDENT"
EOF = "EOF"


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    span: Span

    def __repr__(self):
        return f"{self.kind}({self.value!r})"


_TOKEN_RE = re.compile(
    r"""
      (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
    | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<string>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
    | (?P<op><=|>=|==|!=|[-+*/@=<>()\[\]{},:.])
    """,
    re.VERBOSE,
)

_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")", "]", "}"}

_ESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "t": "\t"}


def _unescape(raw: str, span: Span) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            i += 1
            if i >= len(body) or body[i] not in _ESCAPES:
                raise LexError("unknown string escape", span)
            out.append(_ESCAPES[body[i]])
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    indents = [0]
    depth = 0
    continuing = False  # previous line ended with '\' or a trailing comma

    lines = source.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        # strip comments outside strings
        line = raw
        cut = None
        in_str: str | None = None
        i = 0
        while i < len(line):
            ch = line[i]
            if in_str:
                if ch == "\\":
                    i += 1
                elif ch == in_str:
                    in_str = None
            elif ch in "'\"":
                in_str = ch
            elif ch == "#":
                cut = i
                break
            i += 1
        if in_str:
            raise LexError("unterminated string", Span(lineno, i))
        if cut is not None:
            line = line[:cut]

        backslash = False
        stripped_end = line.rstrip()
        if stripped_end.endswith("\\"):
            backslash = True
            line = stripped_end[:-1]

        body = line.strip()
        if not body and depth == 0 and not continuing:
            continue  # blank line

        if depth == 0 and not continuing and body:
            prefix = line[: len(line) - len(line.lstrip())]
            if "\t" in prefix:
                raise LexError("tabs are not allowed in indentation", Span(lineno, 1))
            indent = len(prefix)
            if indent > indents[-1]:
                indents.append(indent)
                tokens.append(Token(INDENT, indent, Span(lineno, 1)))
            else:
                while indent < indents[-1]:
                    indents.pop()
                    tokens.append(Token(DEDENT, indent, Span(lineno, 1)))
                if indent != indents[-1]:
                    raise LexError("unindent does not match any outer level", Span(lineno, 1))

        pos = line.index(body[0]) if body else 0
        end = len(line.rstrip())
        emitted = False
        while pos < end:
            ch = line[pos]
            if ch in " \t":
                pos += 1
                continue
            m = _TOKEN_RE.match(line, pos)
            if not m:
                raise LexError(f"illegal character {ch!r}", Span(lineno, pos + 1))
            span = Span(lineno, pos + 1)
            text = m.group(0)
            if m.lastgroup == "number":
                val = float(text)
                tokens.append(Token(NUMBER, int(val) if val.is_integer() and
                                    "." not in text and "e" not in text and "E" not in text
                                    else val, span))
            elif m.lastgroup == "name":
                if text in KEYWORDS:
                    tokens.append(Token(KW, text, span))
                else:
                    tokens.append(Token(NAME, text, span))
            elif m.lastgroup == "string":
                tokens.append(Token(STRING, _unescape(text, span), span))
            else:
                if text in _OPEN:
                    depth += 1
                elif text in _CLOSE:
                    if depth == 0:
                        raise LexError(f"unmatched {text!r}", span)
                    depth -= 1
                tokens.append(Token(OP, text, span))
            emitted = True
            pos = m.end()

        if not emitted and not (continuing or depth):
            continue
        trailing_comma = bool(tokens) and tokens[-1].kind == OP and tokens[-1].value == ","
        continuing = backslash or (trailing_comma and depth == 0)
        if depth == 0 and not continuing and emitted:
            tokens.append(Token(NEWLINE, None, Span(lineno, end + 1)))

    if depth > 0:
        raise LexError("unclosed bracket at end of file", Span(len(lines), 1))
    if tokens and tokens[-1].kind != NEWLINE:
        tokens.append(Token(NEWLINE, None, Span(len(lines), 1)))
    while len(indents) > 1:
        indents.pop()
        tokens.append(Token(DEDENT, indents[-1], Span(len(lines), 1)))
    tokens.append(Token(EOF, None, Span(len(lines) + 1, 1)))
    return tokens
