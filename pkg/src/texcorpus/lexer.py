"""Tokenizer for TeX/LaTeX source text, plus the source-document container.

The token stream is lossless: concatenating the source spans of all tokens
reproduces the input exactly. Escapes (``\\%``) and verbatim regions
(``verbatim``/``verbatim*``/``lstlisting`` environments and ``\\verb``) are
resolved here, so downstream extractors never see a ``%`` that the compiler
would not treat as a comment.

Spans are offsets into the decoded source string (0-based, half-open).
Byte input is decoded as UTF-8 with replacement characters, never fatally.
"""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from string import ascii_letters

from .errors import TexcorpusError

WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


def alphabetic_words(text: str) -> list[str]:
    """Split text into words: maximal alphabetic runs, case-folded.

    Digits, underscores and punctuation separate words, so "utf8x" yields
    ["utf"] + ["x"] and "don't" yields ["don", "t"].
    """
    return [m.group(0).casefold() for m in WORD_RE.finditer(text)]


def decode_source(data: bytes | str) -> str:
    """Decode raw source bytes as UTF-8, replacing invalid sequences."""
    if isinstance(data, str):
        return data
    return data.decode("utf-8", errors="replace")


class TokenKind(Enum):
    COMMAND = "command"
    LINE_COMMENT = "line_comment"
    WORD = "word"
    GROUP_OPEN = "group_open"
    GROUP_CLOSE = "group_close"
    OPT_OPEN = "opt_open"
    OPT_CLOSE = "opt_close"
    MATH_SHIFT = "math_shift"
    WHITESPACE = "whitespace"
    OTHER = "other"


@dataclass(frozen=True)
class Token:
    """One lexical unit.

    ``value`` holds the payload: the command name (without backslash), the
    comment text (without the ``%`` or the terminating newline), or the raw
    text for word/whitespace/other tokens. ``start``/``end`` delimit the
    token's span in the source (0-based, half-open); spans of consecutive
    tokens tile the source with no gaps or overlaps.
    """

    kind: TokenKind
    value: str
    start: int
    end: int


VERBATIM_ENVIRONMENTS = ("verbatim", "verbatim*", "lstlisting")

_WS_RE = re.compile(r"\s+")
_ALNUM_RE = re.compile(r"[^\W_]+", re.UNICODE)

_SINGLE_CHAR_KINDS = {
    "{": TokenKind.GROUP_OPEN,
    "}": TokenKind.GROUP_CLOSE,
    "[": TokenKind.OPT_OPEN,
    "]": TokenKind.OPT_CLOSE,
    "$": TokenKind.MATH_SHIFT,
}


def _begin_verbatim_re(environments: tuple[str, ...]) -> re.Pattern:
    names = "|".join(re.escape(name) for name in environments)
    return re.compile(r"[ \t]*\{(" + names + r")\}")


_DEFAULT_BEGIN_RE = _begin_verbatim_re(VERBATIM_ENVIRONMENTS)


def _emit_plain_runs(text: str, start: int, end: int, out: list[Token]) -> None:
    """Tokenize a verbatim region as alternating word/whitespace runs."""
    i = start
    while i < end:
        if text[i].isspace():
            j = i + 1
            while j < end and text[j].isspace():
                j += 1
            out.append(Token(TokenKind.WHITESPACE, text[i:j], i, j))
        else:
            j = i + 1
            while j < end and not text[j].isspace():
                j += 1
            out.append(Token(TokenKind.WORD, text[i:j], i, j))
        i = j


def tokenize(
    source: str | bytes,
    verbatim_environments: tuple[str, ...] = VERBATIM_ENVIRONMENTS,
) -> list[Token]:
    """Convert LaTeX source into a lossless token stream.

    Total over arbitrary input: malformed constructs degrade to OTHER
    tokens, they never raise. ``\\%`` yields a COMMAND token, not a
    comment. Text inside verbatim environments and ``\\verb`` arguments is
    emitted as WORD/WHITESPACE tokens, so no LINE_COMMENT can start there.
    """
    text = decode_source(source)
    begin_re = (
        _DEFAULT_BEGIN_RE
        if verbatim_environments == VERBATIM_ENVIRONMENTS
        else _begin_verbatim_re(verbatim_environments)
    )
    tokens: list[Token] = []
    i = 0
    n = len(text)
    # (content_start, environment name) once a \begin{verbatim...} was seen
    pending_verbatim: tuple[int, str] | None = None

    while i < n:
        if pending_verbatim is not None and i == pending_verbatim[0]:
            env = pending_verbatim[1]
            pending_verbatim = None
            closer = "\\end{" + env + "}"
            stop = text.find(closer, i)
            if stop == -1:
                stop = n
            _emit_plain_runs(text, i, stop, tokens)
            i = stop
            continue

        c = text[i]
        if c == "\\":
            if i + 1 < n and text[i + 1] in ascii_letters:
                j = i + 2
                while j < n and text[j] in ascii_letters:
                    j += 1
                name = text[i + 1 : j]
                tokens.append(Token(TokenKind.COMMAND, name, i, j))
                i = j
                if name == "verb":
                    i = _lex_verb(text, i, tokens)
                elif name == "begin":
                    m = begin_re.match(text, i)
                    if m:
                        pending_verbatim = (m.end(), m.group(1))
            elif i + 1 < n:
                tokens.append(Token(TokenKind.COMMAND, text[i + 1], i, i + 2))
                i += 2
            else:
                # lone trailing backslash: not a valid command name
                tokens.append(Token(TokenKind.OTHER, "\\", i, n))
                i = n
        elif c == "%":
            stop = text.find("\n", i)
            if stop == -1:
                tokens.append(Token(TokenKind.LINE_COMMENT, text[i + 1 :], i, n))
                i = n
            else:
                tokens.append(
                    Token(TokenKind.LINE_COMMENT, text[i + 1 : stop], i, stop + 1)
                )
                i = stop + 1
        elif c in _SINGLE_CHAR_KINDS:
            tokens.append(Token(_SINGLE_CHAR_KINDS[c], c, i, i + 1))
            i += 1
        elif c.isspace():
            m = _WS_RE.match(text, i)
            tokens.append(Token(TokenKind.WHITESPACE, m.group(0), i, m.end()))
            i = m.end()
        elif c.isalnum():
            m = _ALNUM_RE.match(text, i)
            if m:
                tokens.append(Token(TokenKind.WORD, m.group(0), i, m.end()))
                i = m.end()
            else:
                # isalnum but not \w-matched (rare unicode edge): keep as OTHER
                tokens.append(Token(TokenKind.OTHER, c, i, i + 1))
                i += 1
        else:
            tokens.append(Token(TokenKind.OTHER, c, i, i + 1))
            i += 1

    return tokens


def _lex_verb(text: str, i: int, tokens: list[Token]) -> int:
    """Lex the tail of a \\verb command starting right after its name."""
    n = len(text)
    if i < n and text[i] == "*":
        tokens.append(Token(TokenKind.OTHER, "*", i, i + 1))
        i += 1
    if i >= n:
        return i
    delim = text[i]
    if delim == "\n":
        return i
    tokens.append(Token(TokenKind.OTHER, delim, i, i + 1))
    i += 1
    j = i
    while j < n and text[j] != delim and text[j] != "\n":
        j += 1
    _emit_plain_runs(text, i, j, tokens)
    if j < n and text[j] == delim:
        tokens.append(Token(TokenKind.OTHER, delim, j, j + 1))
        j += 1
    return j


class NoMainFile(TexcorpusError):
    """No file in the document declares a document class or style."""


@dataclass
class SourceDocument:
    """One paper: its files, main file, and harvest metadata."""

    id: str
    files: list[tuple[str, bytes]]
    main_file: str | None = None
    timestamp: date | None = None
    category: str = ""
    page_count: int | None = None

    def __post_init__(self) -> None:
        paths = [path for path, _ in self.files]
        if self.main_file is not None and self.main_file not in paths:
            raise ValueError(f"main_file {self.main_file!r} not among files")
        if self.page_count is not None and self.page_count < 1:
            raise ValueError("page_count must be >= 1 when present")

    @property
    def multi_file(self) -> bool:
        return len(self.files) > 1

    def texts(self) -> dict[str, str]:
        return {path: decode_source(data) for path, data in self.files}


_CLASS_MARKER_RE = re.compile(r"\\document(?:class|style)\b")
_BRACED_INPUT_RE = re.compile(r"\\(?:input|include)\s*\{([^{}%\n]+)\}")
_BARE_INPUT_RE = re.compile(r"\\input[ \t]+([A-Za-z0-9_\-./]+)")


def _input_targets(text: str) -> set[str]:
    targets = set(m.group(1).strip() for m in _BRACED_INPUT_RE.finditer(text))
    targets.update(m.group(1) for m in _BARE_INPUT_RE.finditer(text))
    return {t for t in targets if t}


def _names_for(path: str) -> set[str]:
    names = {path}
    if path.endswith(".tex"):
        names.add(path[:-4])
    base = posixpath.basename(path)
    names.add(base)
    if base.endswith(".tex"):
        names.add(base[:-4])
    return names


def detect_main_file(files: list[tuple[str, bytes]]) -> str:
    """Pick the file that declares \\documentclass or \\documentstyle.

    Ties are broken by preferring candidates that fewer other files pull in
    via \\input/\\include, then by lexicographically smallest path.
    """
    if not files:
        raise NoMainFile("document has no files")
    texts = {path: decode_source(data) for path, data in files}
    candidates = [path for path, text in texts.items() if _CLASS_MARKER_RE.search(text)]
    if not candidates:
        raise NoMainFile("no file contains \\documentclass or \\documentstyle")
    if len(candidates) == 1:
        return candidates[0]

    def inbound_references(candidate: str) -> int:
        names = _names_for(candidate)
        count = 0
        for path, text in texts.items():
            if path == candidate:
                continue
            if _input_targets(text) & names:
                count += 1
        return count

    return min(candidates, key=lambda path: (inbound_references(path), path))
