"""Scan a library source tree for API symbols and mine usage examples."""

from __future__ import annotations

import ast
import os
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from readmellm import lexer

FULL = "full"
SIGNATURE_ONLY = "signature_only"
MODES = (FULL, SIGNATURE_ONLY)


class ExtractWarning(UserWarning):
    """A file or construct was skipped during scanning."""


class UnknownProfileError(ValueError):
    pass


@dataclass(frozen=True)
class LanguageProfile:
    id: str
    extensions: tuple[str, ...]
    doc_extensions: tuple[str, ...] = (".md", ".markdown")
    example_dirs: tuple[str, ...] = ("example", "examples")
    # fence info strings accepted by mine_examples; "" is an unlabelled fence
    fence_languages: tuple[str, ...] = ("", "python", "py", "python3", "pycon")
    exclude_dirs: tuple[str, ...] = (
        "tests", "test", "docs", "doc", "examples", "example", "build", "dist",
        "node_modules", "__pycache__", "venv", ".venv", "site-packages",
    )


PROFILES = {
    "python": LanguageProfile("python", (".py", ".pyi")),
}


def get_profile(profile: Union[str, LanguageProfile]) -> LanguageProfile:
    if isinstance(profile, LanguageProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise UnknownProfileError(
            f"unknown language profile {profile!r}; known: {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class ApiSymbol:
    qualified_name: str
    kind: str                   # "function", "method" or "class"
    signature_text: str
    full_text: str
    docstring: Optional[str]
    path: str                   # posix path relative to the scan root
    lines: tuple[int, int]      # 1-based inclusive span
    parent: Optional[str] = None

    @property
    def name(self) -> str:
        return self.qualified_name.rsplit(".", 1)[-1]

    @property
    def visibility(self) -> str:
        return "private" if self.name.startswith("_") else "public"


@dataclass(frozen=True)
class ExampleSnippet:
    body: str
    label: Optional[str]
    path: str
    lines: tuple[int, int]
    referenced_identifiers: frozenset = field(default_factory=frozenset)
    kind: str = "fence"         # "fence" (from a docs file) or "script"
    language: str = ""


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def identifiers(text: str) -> frozenset:
    return frozenset(_IDENT.findall(text))


# -- definitions -------------------------------------------------------------

_DEF = re.compile(r"^\s*(?:async\s+)?def\s+([A-Za-z_]\w*)")
_CLASS = re.compile(r"^\s*class\s+([A-Za-z_]\w*)")
_DECORATOR = re.compile(r"^\s*@")
_ATTRIBUTE = re.compile(r"^\s*[A-Za-z_][\w.]*\s*(?::|=(?!=))")


@dataclass
class _Def:
    name: str
    kind: str
    indent: int
    start: int                  # first physical line (decorators included)
    header: lexer.LogicalLine
    colon: tuple[int, int]
    end: int = -1
    children: list = field(default_factory=list)
    body: list = field(default_factory=list)    # direct body logical lines


def _definitions(phys: list[lexer.PhysicalLine], path: str = "<text>") -> list[_Def]:
    """Build the definition tree of a source text; returns top-level nodes."""
    logical = lexer.logical_lines(phys)
    roots: list[_Def] = []
    stack: list[_Def] = []
    pending: list[lexer.LogicalLine] = []
    for ll in logical:
        while stack and ll.indent <= stack[-1].indent:
            stack.pop()
        first = phys[ll.first].masked
        m = _DEF.match(first) or _CLASS.match(first)
        if _DECORATOR.match(first):
            if stack:
                stack[-1].body.append(ll)
            pending.append(ll)
            continue
        if m is None:
            if stack:
                stack[-1].body.append(ll)
            pending = []
            continue
        colon = lexer.header_colon(phys, ll)
        if colon is None:
            warnings.warn(f"{path}:{ll.first + 1}: definition header without ':' skipped",
                          ExtractWarning, stacklevel=3)
            pending = []
            continue
        decorators = [d for d in pending if d.indent == ll.indent]
        node = _Def(
            name=m.group(1),
            kind="class" if _CLASS.match(first) else "function",
            indent=ll.indent,
            start=decorators[0].first if decorators else ll.first,
            header=ll,
            colon=colon,
        )
        pending = []
        if stack:
            stack[-1].children.append(node)
            stack[-1].body.append(ll)
        else:
            roots.append(node)
        stack.append(node)
    _assign_ends(roots, logical)
    return roots


def _assign_ends(roots: list[_Def], logical: list[lexer.LogicalLine]) -> None:
    position = {ll.first: i for i, ll in enumerate(logical)}

    def visit(node: _Def):
        end = node.header.last
        i = position[node.header.first] + 1
        while i < len(logical) and logical[i].indent > node.indent:
            end = logical[i].last
            i += 1
        node.end = end
        for child in node.children:
            visit(child)

    for r in roots:
        visit(r)


def _docstring(phys, node: _Def) -> Optional[str]:
    body = [ll for ll in node.body if ll.first > node.header.last]
    inline = phys[node.colon[0]].masked[node.colon[1] + 1:].strip()
    if inline or not body or not lexer.is_string_statement(phys, body[0]):
        return None
    raw = "\n".join(p.raw for p in phys[body[0].first:body[0].last + 1]).strip()
    try:
        value = ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw
    return value if isinstance(value, str) else None


def _join(phys, first: int, last: int) -> str:
    return "\n".join(p.raw for p in phys[first:last + 1])


def _signature_text(phys, node: _Def) -> str:
    line, col = node.colon
    head = [p.raw for p in phys[node.start:line]]
    head.append(phys[line].raw[:col + 1])
    return "\n".join(head)


def _module_name(rel: Path) -> str:
    parts = list(rel.with_suffix("").parts)
    if parts and parts[0] == "src":
        parts = parts[1:]
    if parts and parts[-1] == "__init__":
        parts = parts[:-1]
    return ".".join(parts)


def symbols_from_text(text: str, module: str = "", path: str = "<text>") -> list[ApiSymbol]:
    """Extract top-level and class-nested definitions from one source text."""
    phys = lexer.scan(text)
    out: list[ApiSymbol] = []

    def emit(node: _Def, prefix: str, parent_kind: Optional[str], parent: Optional[str]):
        qual = f"{prefix}.{node.name}" if prefix else node.name
        if node.kind == "class":
            kind = "class"
        else:
            kind = "method" if parent_kind == "class" else "function"
        out.append(ApiSymbol(
            qualified_name=qual,
            kind=kind,
            signature_text=_signature_text(phys, node),
            full_text=_join(phys, node.start, node.end),
            docstring=_docstring(phys, node),
            path=path,
            lines=(node.start + 1, node.end + 1),
            parent=parent,
        ))
        if node.kind == "class":
            for child in node.children:
                emit(child, qual, "class", qual)
        # definitions nested inside functions are implementation detail

    for root in _definitions(phys, path):
        emit(root, module, None, None)
    return sorted(out, key=lambda s: s.lines[0])


def _walk(root: Path, exclude: Iterable[str]) -> list[Path]:
    exclude = set(exclude)
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in exclude and not d.startswith("."))
        for name in filenames:
            found.append(Path(dirpath) / name)
    return sorted(found, key=lambda p: p.relative_to(root).as_posix())


def _read(path: Path) -> Optional[str]:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        warnings.warn(f"{path}: unreadable, skipped ({exc})", ExtractWarning, stacklevel=3)
        return None


def scan_sources(root, profile: Union[str, LanguageProfile] = "python", *,
                 public_only: bool = False, workers: int = 1) -> list[ApiSymbol]:
    """Return every top-level and class-nested definition under ``root``.

    Output is ordered by relative file path, then line, regardless of
    ``workers``.  Unreadable files raise an ``ExtractWarning`` and are
    skipped.
    """
    profile = get_profile(profile)
    root = Path(root)
    files = [p for p in _walk(root, profile.exclude_dirs) if p.suffix in profile.extensions]

    def one(path: Path) -> list[ApiSymbol]:
        text = _read(path)
        if text is None:
            return []
        rel = path.relative_to(root)
        return symbols_from_text(text, _module_name(rel), rel.as_posix())

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_file = list(pool.map(one, files))
    else:
        per_file = [one(p) for p in files]
    symbols = [s for batch in per_file for s in batch]
    symbols.sort(key=lambda s: (s.path, s.lines[0]))
    if public_only:
        symbols = [s for s in symbols if s.visibility == "public"
                   and not (s.parent and s.parent.rsplit(".", 1)[-1].startswith("_"))]
    return symbols


# -- signature stripping -----------------------------------------------------


def strip_to_signatures(text: str) -> str:
    """Reduce source text to definition headers.

    Function bodies (docstrings included) are removed; class bodies keep
    attribute declarations and the headers of their methods and nested
    classes at original indentation.  Other top-level statements are kept.
    A blank source line directly above a kept member is preserved so the
    output is always a subsequence of the input lines, except that an
    inline body (``def f(): pass``) is cut after the colon.
    """
    phys = lexer.scan(text)
    logical = lexer.logical_lines(phys)
    kept: list[str] = []
    skip_indent: Optional[int] = None
    classes: list[int] = []
    pending: list[lexer.LogicalLine] = []

    def keep_lines(first: int, last: int, cut=None):
        if (first > 0 and not phys[first - 1].raw.strip() and kept and kept[-1].strip()
                and lexer.indent_width(kept[-1]) >= lexer.indent_width(phys[first].raw)):
            kept.append(phys[first - 1].raw)
        for idx in range(first, last + 1):
            if cut is not None and idx == cut[0]:
                kept.append(phys[idx].raw[:cut[1] + 1])
                return
            kept.append(phys[idx].raw)

    for ll in logical:
        if skip_indent is not None:
            if ll.indent > skip_indent:
                continue
            skip_indent = None
        while classes and ll.indent <= classes[-1]:
            classes.pop()
        first = phys[ll.first].masked
        if _DECORATOR.match(first):
            pending.append(ll)
            continue
        m = _DEF.match(first) or _CLASS.match(first)
        colon = lexer.header_colon(phys, ll) if m else None
        if m and colon is not None:
            for d in pending:
                keep_lines(d.first, d.last)
            inline = phys[colon[0]].masked[colon[1] + 1:].strip()
            keep_lines(ll.first, ll.last, cut=colon if inline or colon[0] < ll.last else None)
            if _CLASS.match(first):
                classes.append(ll.indent)
            else:
                skip_indent = ll.indent
            pending = []
            continue
        for d in pending:
            if not classes:
                keep_lines(d.first, d.last)
        pending = []
        if classes:
            if _ATTRIBUTE.match(first) and not lexer.is_string_statement(phys, ll):
                keep_lines(ll.first, ll.last)
        else:
            keep_lines(ll.first, ll.last)
    return "\n".join(kept)


def extract_signature(symbol: ApiSymbol, mode: str = FULL) -> str:
    """Render a symbol in ``full`` or ``signature_only`` mode."""
    if mode == FULL:
        return symbol.full_text
    if mode != SIGNATURE_ONLY:
        raise ValueError(f"unknown mode {mode!r}")
    return strip_to_signatures(symbol.full_text)


# -- examples ----------------------------------------------------------------

_FENCE_OPEN = re.compile(r"^(\s*)(`{3,}|~{3,})\s*([\w+.-]*)")
_ATX = re.compile(r"^\s{0,3}#{1,6}\s+(.*?)\s*#*\s*$")
_TAB = re.compile(r'^\s*(?:===|\?\?\?\+?)\s+"(.+)"\s*$')
_SETEXT = re.compile(r"^\s{0,3}(=+|-+)\s*$")


def _dedent_by(line: str, width: int) -> str:
    i = 0
    while i < width and i < len(line) and line[i] in " \t":
        i += 1
    return line[i:]


def fenced_blocks(text: str, path: str = "<text>") -> list[ExampleSnippet]:
    """Fenced code blocks of a markdown text, labelled by nearest heading."""
    lines = text.splitlines()
    out = []
    label = None
    i = 0
    while i < len(lines):
        line = lines[i]
        m = _FENCE_OPEN.match(line)
        if m:
            indent, fence, lang = len(m.group(1)), m.group(2), m.group(3)
            close = re.compile(r"^\s*" + re.escape(fence[0]) + "{" + str(len(fence)) + r",}\s*$")
            j = i + 1
            while j < len(lines) and not close.match(lines[j]):
                j += 1
            body_lines = [_dedent_by(ln, indent) for ln in lines[i + 1:j]]
            body = "\n".join(body_lines).strip("\n")
            if body.strip():
                out.append(ExampleSnippet(
                    body=body, label=label, path=path, lines=(i + 2, max(i + 2, j)),
                    referenced_identifiers=identifiers(body), kind="fence", language=lang,
                ))
            i = j + 1
            continue
        heading = _ATX.match(line) or _TAB.match(line)
        if heading:
            label = heading.group(1)
        elif (_SETEXT.match(line) and i > 0 and lines[i - 1].strip()
              and not _FENCE_OPEN.match(lines[i - 1])):
            label = lines[i - 1].strip()
        i += 1
    return out


def mine_examples(root, profile: Union[str, LanguageProfile] = "python") -> list[ExampleSnippet]:
    """Collect usage examples under ``root``.

    Fenced blocks come from markdown files; whole scripts come from
    directories named ``example``/``examples`` and are labelled by file
    name.  Ordered by relative path, then line.
    """
    profile = get_profile(profile)
    root = Path(root)
    skip = {"node_modules", "__pycache__", "build", "dist", "venv", ".venv"}
    out: list[ExampleSnippet] = []
    for path in _walk(root, skip):
        rel = path.relative_to(root)
        if path.suffix in profile.doc_extensions:
            text = _read(path)
            if text is not None:
                out += [e for e in fenced_blocks(text, rel.as_posix())
                        if e.language.lower() in profile.fence_languages]
        elif path.suffix in profile.extensions and any(
                part in profile.example_dirs for part in rel.parts[:-1]):
            text = _read(path)
            if text is None or not text.strip():
                continue
            body = text.rstrip("\n")
            out.append(ExampleSnippet(
                body=body, label=path.name, path=rel.as_posix(),
                lines=(1, body.count("\n") + 1),
                referenced_identifiers=identifiers(body), kind="script",
                language=profile.id,
            ))
    out.sort(key=lambda e: (e.path, e.lines[0]))
    return out


def pair_examples(symbols: list[ApiSymbol],
                  examples: list[ExampleSnippet]) -> dict[str, list[ExampleSnippet]]:
    """Map each symbol to the examples whose identifiers include its name."""
    pairing: dict[str, list[ExampleSnippet]] = {}
    for sym in symbols:
        bucket = pairing.setdefault(sym.qualified_name, [])
        for ex in examples:
            if sym.name in ex.referenced_identifiers and ex not in bucket:
                bucket.append(ex)
    return pairing
