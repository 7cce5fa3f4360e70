"""Per-document structure extraction: packages, graphics, theorems, authors,
macro definitions and word counts, combined into one feature vector.

All extractors walk the token stream from the lexer, so constructs inside
line comments or verbatim regions are never miscounted. Documents made of
several files are flattened first by splicing \\input/\\include targets into
the main file.
"""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass, field
from datetime import date

from .comments import (
    CommentSpan,
    comment_words,
    detect_ignore_macros,
    extract_line_comments,
    extract_macro_comments,
)
from .errors import Diagnostic
from .lexer import (
    NoMainFile,
    SourceDocument,
    Token,
    TokenKind,
    alphabetic_words,
    detect_main_file,
    tokenize,
)

_BRACED_ARG_RE = re.compile(r"[ \t]*\{([^{}%\n]*)\}")
_BARE_ARG_RE = re.compile(r"[ \t]+([A-Za-z0-9_\-./]+)")


def _resolve_target(name: str, current: str, texts: dict[str, str]) -> str | None:
    """Map an \\input argument to a file path present in texts."""
    candidates = [name]
    if not name.endswith(".tex"):
        candidates.append(name + ".tex")
    directory = posixpath.dirname(current)
    if directory:
        joined = posixpath.normpath(posixpath.join(directory, name))
        candidates.append(joined)
        if not joined.endswith(".tex"):
            candidates.append(joined + ".tex")
    for candidate in candidates:
        if candidate in texts:
            return candidate
    return None


def inline_sources(
    texts: dict[str, str],
    main: str,
    diagnostics: list[Diagnostic] | None = None,
) -> str:
    """Splice \\input/\\include targets into the main file's source.

    Each file is inlined at most once; repeated references and cycles are
    dropped with a diagnostic. References to files not in the document are
    kept verbatim, also with a diagnostic. \\input inside comments or
    verbatim text is never expanded, since it does not tokenize as a
    command there.
    """
    visited: set[str] = set()

    def process(path: str) -> str:
        visited.add(path)
        source = texts[path]
        parts: list[str] = []
        last = 0
        for tok in tokenize(source):
            if tok.kind is not TokenKind.COMMAND or tok.value not in (
                "input",
                "include",
            ):
                continue
            if tok.start < last:
                continue
            m = _BRACED_ARG_RE.match(source, tok.end)
            if m is None and tok.value == "input":
                m = _BARE_ARG_RE.match(source, tok.end)
            if m is None:
                continue
            name = m.group(1).strip()
            if not name:
                continue
            target = _resolve_target(name, path, texts)
            parts.append(source[last : tok.start])
            last = m.end()
            if target is None:
                parts.append(source[tok.start : m.end()])
                if diagnostics is not None:
                    diagnostics.append(
                        Diagnostic(
                            "inline",
                            f"\\{tok.value} target {name!r} not found in "
                            f"{path}; kept as-is",
                        )
                    )
            elif target in visited:
                if diagnostics is not None:
                    diagnostics.append(
                        Diagnostic(
                            "inline",
                            f"\\{tok.value} of {target!r} in {path} skipped: "
                            "already inlined",
                        )
                    )
            else:
                parts.append(process(target))
        parts.append(source[last:])
        return "".join(parts)

    return process(main)


def _match_group(tokens: list[Token], open_idx: int) -> int | None:
    """Token index of the GROUP_CLOSE matching the GROUP_OPEN at open_idx."""
    depth = 1
    i = open_idx + 1
    while i < len(tokens):
        kind = tokens[i].kind
        if kind is TokenKind.GROUP_OPEN:
            depth += 1
        elif kind is TokenKind.GROUP_CLOSE:
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


_SKIPPABLE = (TokenKind.WHITESPACE, TokenKind.LINE_COMMENT)


def _next_significant(tokens: list[Token], idx: int) -> int:
    while idx < len(tokens) and tokens[idx].kind in _SKIPPABLE:
        idx += 1
    return idx


def _read_group(
    source: str, tokens: list[Token], idx: int
) -> tuple[str, int] | None:
    """Read a {…} group starting at the next significant token.

    Returns (inner text, index just past the closing brace), or None when
    no well-formed group is there.
    """
    idx = _next_significant(tokens, idx)
    if idx >= len(tokens) or tokens[idx].kind is not TokenKind.GROUP_OPEN:
        return None
    close = _match_group(tokens, idx)
    if close is None:
        return None
    return source[tokens[idx].end : tokens[close].start], close + 1


def _read_optional(
    source: str, tokens: list[Token], idx: int
) -> tuple[str, int] | None:
    """Read a [...] group starting at the next significant token."""
    idx = _next_significant(tokens, idx)
    if idx >= len(tokens) or tokens[idx].kind is not TokenKind.OPT_OPEN:
        return None
    i = idx + 1
    while i < len(tokens) and tokens[i].kind is not TokenKind.OPT_CLOSE:
        i += 1
    if i >= len(tokens):
        return None
    return source[tokens[idx].end : tokens[i].start], i + 1


@dataclass(frozen=True)
class PackageUse:
    """One package named in a \\usepackage or \\RequirePackage declaration."""

    name: str
    options: tuple[str, ...]
    declared_at: int  # character offset of the declaring command


def extract_packages(source: str, tokens: list[Token] | None = None) -> list[PackageUse]:
    """All package declarations, in order, duplicates preserved.

    A single \\usepackage[opts]{a, b} yields one entry per package name,
    each carrying the shared option list.
    """
    if tokens is None:
        tokens = tokenize(source)
    uses: list[PackageUse] = []
    for i, tok in enumerate(tokens):
        if tok.kind is not TokenKind.COMMAND or tok.value not in (
            "usepackage",
            "RequirePackage",
        ):
            continue
        idx = i + 1
        options: tuple[str, ...] = ()
        opt = _read_optional(source, tokens, idx)
        if opt is not None:
            raw_options, idx = opt
            options = tuple(
                part.strip() for part in raw_options.split(",") if part.strip()
            )
        group = _read_group(source, tokens, idx)
        if group is None:
            continue
        names, _ = group
        for name in names.split(","):
            name = name.strip()
            if name:
                uses.append(
                    PackageUse(name=name, options=options, declared_at=tok.start)
                )
    return uses


@dataclass(frozen=True)
class GraphicsUse:
    """Graphics package declarations versus actual inclusion commands."""

    graphicx_declared: bool
    epsfig_declared: bool
    includegraphics_count: int
    epsfig_command_count: int

    @property
    def graphicx_unused(self) -> bool:
        return self.graphicx_declared and self.includegraphics_count == 0

    @property
    def epsfig_unused(self) -> bool:
        return self.epsfig_declared and self.epsfig_command_count == 0


def analyze_graphics(tokens: list[Token], packages: list[PackageUse]) -> GraphicsUse:
    declared = {p.name for p in packages}
    includegraphics = 0
    epsfig_cmd = 0
    for tok in tokens:
        if tok.kind is not TokenKind.COMMAND:
            continue
        if tok.value == "includegraphics":
            includegraphics += 1
        elif tok.value == "epsfig":
            epsfig_cmd += 1
    return GraphicsUse(
        graphicx_declared="graphicx" in declared,
        epsfig_declared="epsfig" in declared,
        includegraphics_count=includegraphics,
        epsfig_command_count=epsfig_cmd,
    )


@dataclass(frozen=True)
class TheoremCounts:
    """Theorem environments used, split from lemma-grade environments."""

    theorem_count: int
    theorem_like_count: int


_THEOREM_TITLES = {"theorem", "lemma", "proposition", "corollary"}
_BUILTIN_THEOREM_RE = re.compile(r"(theorem|lemma|proposition|corollary)\*?\Z", re.IGNORECASE)


def extract_theorems(source: str, tokens: list[Token]) -> TheoremCounts:
    """Count \\begin{...} uses of theorem environments.

    \\newtheorem{env}{Title} binds env to the class of its title when the
    title is Theorem/Lemma/Proposition/Corollary; standard environment
    names count without a binding. theorem_count covers theorems proper,
    theorem_like_count the other three classes.
    """
    bound: dict[str, str] = {}
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok.kind is TokenKind.COMMAND and tok.value == "newtheorem":
            idx = i + 1
            nxt = _next_significant(tokens, idx)
            if (
                nxt < n
                and tokens[nxt].kind is TokenKind.OTHER
                and tokens[nxt].value == "*"
            ):
                idx = nxt + 1
            group = _read_group(source, tokens, idx)
            if group is not None:
                env_name, idx = group
                opt = _read_optional(source, tokens, idx)
                if opt is not None:
                    _, idx = opt
                title_group = _read_group(source, tokens, idx)
                if title_group is not None:
                    title, idx = title_group
                    normalized = title.strip().lower()
                    if normalized in _THEOREM_TITLES:
                        bound[env_name.strip()] = normalized
                i = idx
                continue
        i += 1

    theorem = 0
    theorem_like = 0
    i = 0
    while i < n:
        tok = tokens[i]
        if tok.kind is TokenKind.COMMAND and tok.value == "begin":
            group = _read_group(source, tokens, i + 1)
            if group is not None:
                env, nxt = group
                env = env.strip()
                cls = bound.get(env)
                if cls is None:
                    m = _BUILTIN_THEOREM_RE.match(env)
                    if m:
                        cls = m.group(1).lower()
                if cls == "theorem":
                    theorem += 1
                elif cls is not None:
                    theorem_like += 1
                i = nxt
                continue
        i += 1
    return TheoremCounts(theorem_count=theorem, theorem_like_count=theorem_like)


def count_figures(source: str, tokens: list[Token]) -> int:
    """Number of figure/figure* environments."""
    count = 0
    for i, tok in enumerate(tokens):
        if tok.kind is not TokenKind.COMMAND or tok.value != "begin":
            continue
        group = _read_group(source, tokens, i + 1)
        if group is not None and group[0].strip() in ("figure", "figure*"):
            count += 1
    return count


def count_newcommands(tokens: list[Token]) -> int:
    """Number of \\newcommand and \\renewcommand definitions."""
    return sum(
        1
        for tok in tokens
        if tok.kind is TokenKind.COMMAND
        and tok.value in ("newcommand", "renewcommand")
    )


@dataclass(frozen=True)
class AuthorInfo:
    """Author count plus whether any \\author declaration was found."""

    count: int
    block_found: bool


_AUTHOR_NOISE_MACROS = {"thanks", "affil", "affiliation"}


def _segment_has_words(tokens: list[Token]) -> bool:
    """Whether a name segment has visible words outside noise macros."""
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok.kind is TokenKind.COMMAND and tok.value in _AUTHOR_NOISE_MACROS:
            idx = _next_significant(tokens, i + 1)
            if idx < n and tokens[idx].kind is TokenKind.GROUP_OPEN:
                close = _match_group(tokens, idx)
                if close is not None:
                    i = close + 1
                    continue
            i += 1
            continue
        if tok.kind is TokenKind.WORD and alphabetic_words(tok.value):
            return True
        if tok.kind is TokenKind.GROUP_OPEN or tok.kind is TokenKind.GROUP_CLOSE:
            i += 1
            continue
        i += 1
    return False


def _count_block_authors(block: str) -> int:
    """Authors inside one \\author{...} block: segments split on \\and or
    \\\\ at brace depth zero, counting segments that carry a name."""
    tokens = tokenize(block)
    segments: list[list[Token]] = [[]]
    depth = 0
    for tok in tokens:
        if tok.kind is TokenKind.GROUP_OPEN:
            depth += 1
        elif tok.kind is TokenKind.GROUP_CLOSE:
            depth -= 1
        if (
            depth == 0
            and tok.kind is TokenKind.COMMAND
            and tok.value in ("and", "\\")
        ):
            segments.append([])
            continue
        segments[-1].append(tok)
    return sum(1 for seg in segments if _segment_has_words(seg))


def extract_authors(source: str, tokens: list[Token]) -> AuthorInfo:
    """Count authors from \\author declarations.

    Several \\author blocks before \\maketitle mean one author per block
    (the affiliation-package convention). A single block is split on \\and
    and on line breaks.
    """
    maketitle_at: int | None = None
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.COMMAND and tok.value == "maketitle":
            maketitle_at = i
            break

    blocks: list[str] = []
    for i, tok in enumerate(tokens):
        if tok.kind is not TokenKind.COMMAND or tok.value != "author":
            continue
        if maketitle_at is not None and i > maketitle_at:
            break
        idx = i + 1
        opt = _read_optional(source, tokens, idx)
        if opt is not None:
            _, idx = opt
        group = _read_group(source, tokens, idx)
        if group is None:
            continue
        content, _ = group
        if content.strip():
            blocks.append(content)

    if not blocks:
        return AuthorInfo(count=0, block_found=False)
    if len(blocks) > 1:
        return AuthorInfo(count=len(blocks), block_found=True)
    return AuthorInfo(count=_count_block_authors(blocks[0]), block_found=True)


def _to_char_ranges(spans: list[CommentSpan]) -> list[tuple[int, int]]:
    """CommentSpan 1-based closed spans as 0-based half-open ranges."""
    return sorted((span.start - 1, span.end) for span in spans)


def collect_words(
    tokens: list[Token], exclude_spans: list[tuple[int, int]] | None = None
) -> list[str]:
    """Visible words of the token stream, in order.

    Command names count as words (without the backslash); line comments
    never do. ``exclude_spans`` removes tokens lying inside the given
    0-based half-open character ranges, which is how no-op macro
    invocations are kept out of the text.
    """
    ranges = exclude_spans or []
    words: list[str] = []
    ri = 0
    for tok in tokens:
        if tok.kind not in (TokenKind.COMMAND, TokenKind.WORD):
            continue
        while ri < len(ranges) and ranges[ri][1] <= tok.start:
            ri += 1
        if ri < len(ranges):
            lo, hi = ranges[ri]
            if tok.start >= lo and tok.end <= hi:
                continue
        words.extend(alphabetic_words(tok.value))
    return words


@dataclass(frozen=True)
class FeatureVector:
    """Everything measured about one document."""

    doc_id: str
    category: str
    timestamp: date | None
    multi_file: bool
    word_count: int
    comment_word_count: int
    page_count: int | None
    package_count: int
    package_names: tuple[str, ...]
    newcommand_count: int
    theorem_count: int
    theorem_like_count: int
    figure_count: int
    includegraphics_count: int
    epsfig_command_count: int
    graphicx_declared: bool
    epsfig_declared: bool
    author_count: int
    author_block_found: bool

    @property
    def graphicx_unused(self) -> bool:
        return self.graphicx_declared and self.includegraphics_count == 0

    @property
    def epsfig_unused(self) -> bool:
        return self.epsfig_declared and self.epsfig_command_count == 0


@dataclass
class ExtractionResult:
    """Features plus the underlying comments, words and soft failures."""

    features: FeatureVector
    comments: list[CommentSpan]
    text_words: list[str]
    comment_words: list[str]
    diagnostics: list[Diagnostic] = field(default_factory=list)


def extract_document(
    doc: SourceDocument, ignore_macros: set[str] | None = None
) -> ExtractionResult:
    """Run the whole extraction pipeline on one document.

    Comment spans in the result index into the document's assembled source
    (main file with inputs spliced in).
    """
    diagnostics: list[Diagnostic] = []
    texts = doc.texts()
    main = doc.main_file
    if main is None:
        try:
            main = detect_main_file(doc.files)
        except NoMainFile:
            if len(doc.files) == 1:
                main = doc.files[0][0]
                diagnostics.append(
                    Diagnostic(
                        "main-file",
                        f"{doc.id}: no \\documentclass found; using the only "
                        f"file {main!r}",
                    )
                )
            else:
                raise

    source = inline_sources(texts, main, diagnostics)
    tokens = tokenize(source)

    line_spans = extract_line_comments(source, tokens)
    if ignore_macros is None:
        ignore_macros = detect_ignore_macros(tokens)
    macro_spans = extract_macro_comments(source, tokens, ignore_macros, diagnostics)
    comments = sorted(line_spans + macro_spans, key=lambda s: (s.start, s.end))

    text_words = collect_words(tokens, _to_char_ranges(macro_spans))
    c_words = comment_words(comments)

    packages = extract_packages(source, tokens)
    graphics = analyze_graphics(tokens, packages)
    theorems = extract_theorems(source, tokens)
    authors = extract_authors(source, tokens)
    distinct_packages = tuple(sorted({p.name for p in packages}))

    features = FeatureVector(
        doc_id=doc.id,
        category=doc.category,
        timestamp=doc.timestamp,
        multi_file=doc.multi_file,
        word_count=len(text_words),
        comment_word_count=len(c_words),
        page_count=doc.page_count,
        package_count=len(distinct_packages),
        package_names=distinct_packages,
        newcommand_count=count_newcommands(tokens),
        theorem_count=theorems.theorem_count,
        theorem_like_count=theorems.theorem_like_count,
        figure_count=count_figures(source, tokens),
        includegraphics_count=graphics.includegraphics_count,
        epsfig_command_count=graphics.epsfig_command_count,
        graphicx_declared=graphics.graphicx_declared,
        epsfig_declared=graphics.epsfig_declared,
        author_count=authors.count,
        author_block_found=authors.block_found,
    )
    return ExtractionResult(
        features=features,
        comments=comments,
        text_words=text_words,
        comment_words=c_words,
        diagnostics=diagnostics,
    )


def build_feature_vector(
    doc: SourceDocument, ignore_macros: set[str] | None = None
) -> FeatureVector:
    return extract_document(doc, ignore_macros).features
