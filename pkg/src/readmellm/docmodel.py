"""ReadMe.LLM document model: rendering, tolerant parsing and linting.

The on-disk grammar is line oriented.  A tag is recognised only when it is
the sole non-whitespace content of a line, so payloads may carry raw ``<``,
``>`` and quotes without escaping::

    Rules:
    Rule number 1: ...

    <ReadMe.LLM>
    <context_description>
    ...
    </context_description>

    <context_1>
    <context_1_description>
    ...
    </context_1_description>

    <context_1_code_snippet>
    ...
    </context_1_code_snippet>

    <context_1_examples>
    ...
    </context_1_examples>
    </context_1>
    </ReadMe.LLM>
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

ROOT_TAG = "ReadMe.LLM"
DESCRIPTION_TAG = "context_description"
SUBSECTIONS = ("description", "code_snippet", "examples")
# older template spelling, accepted on input only
LEGACY_SUBSECTIONS = {"function": "code_snippet", "example": "examples"}

_TAG_LINE = re.compile(r"^\s*<\s*(/?)\s*([A-Za-z0-9_.]+)\s*>\s*$")
_SECTION_TAG = re.compile(r"^context_(\d+)(?:_([a-z_]+))?$")
_RULE_LINE = re.compile(r"^\s*Rule number\s+(\d+)\s*:\s?(.*?)\s*$")
_RULES_HEADER = re.compile(r"^\s*Rules\s*:\s*$")

ERROR = "error"
WARNING = "warning"

#: Every diagnostic code either ``parse`` or ``lint`` can emit.
LINT_RULES: dict[str, tuple[str, str]] = {
    "RootMissing": (ERROR, "no <ReadMe.LLM> root tag line was found"),
    "RootNotClosed": (ERROR, "</ReadMe.LLM> is missing"),
    "UnclosedTag": (ERROR, "a block was still open when an enclosing block ended"),
    "UnexpectedTag": (ERROR, "a tag appeared where the grammar does not allow it"),
    "UnmatchedCloseTag": (ERROR, "a closing tag has no matching opening tag"),
    "DuplicateBlock": (ERROR, "a block appears twice in the same parent"),
    "TrailingContent": (WARNING, "non-blank text after </ReadMe.LLM>"),
    "StrayText": (WARNING, "non-blank text outside any payload block"),
    "LegacyTagDialect": (WARNING, "<context_N_function>/<context_N_example> spelling"),
    "RuleNumbering": (WARNING, "rule lines are not numbered 1..N in order"),
    "NonContiguousNumbering": (ERROR, "section numbers are not 1..N in order"),
    "SubsectionMissing": (ERROR, "a section lacks description, code_snippet or examples"),
    "MissingRules": (WARNING, "the document has no rules block"),
    "EmptyExamples": (WARNING, "a section has empty examples text"),
    "EmptyCodeSnippet": (WARNING, "a section has an empty code snippet"),
}


@dataclass(frozen=True)
class ContextSection:
    """One numbered unit: description, code snippet and examples.

    A subsection is ``None`` only on documents recovered from damaged input;
    ``lint`` reports those as ``SubsectionMissing``.
    """

    number: int
    description: Optional[str] = ""
    code_snippet: Optional[str] = ""
    examples: Optional[str] = ""


@dataclass(frozen=True)
class ReadMeLlmDoc:
    rules: tuple[str, ...] = ()
    context_description: str = ""
    sections: tuple[ContextSection, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "sections", tuple(self.sections))


@dataclass(frozen=True)
class LintDiagnostic:
    severity: str
    code: str
    message: str
    line: Optional[int] = None
    section: Optional[int] = None

    def __str__(self):
        where = f"line {self.line}" if self.line is not None else (
            f"section {self.section}" if self.section is not None else "document")
        return f"{where}: {self.severity}: {self.code}: {self.message}"


@dataclass(frozen=True)
class RenderOptions:
    rules_header: bool = True
    blank_between_blocks: bool = True


def _diag(code: str, message: str = "", *, line=None, section=None) -> LintDiagnostic:
    severity, default = LINT_RULES[code]
    return LintDiagnostic(severity, code, message or default, line=line, section=section)


def has_errors(diagnostics) -> bool:
    return any(d.severity == ERROR for d in diagnostics)


# -- rendering ---------------------------------------------------------------


def _block(name: str, payload: Optional[str]) -> list[str]:
    out = [f"<{name}>"]
    if payload:
        out.append(payload)
    out.append(f"</{name}>")
    return out


def render(doc: ReadMeLlmDoc, options: RenderOptions = RenderOptions()) -> str:
    """Render ``doc`` to ReadMe.LLM text with ``\\n`` line endings."""
    gap = [""] if options.blank_between_blocks else []
    lines: list[str] = []
    if doc.rules:
        if options.rules_header:
            lines.append("Rules:")
        lines += [f"Rule number {i}: {rule}" for i, rule in enumerate(doc.rules, 1)]
        lines += gap
    lines.append(f"<{ROOT_TAG}>")
    lines += _block(DESCRIPTION_TAG, doc.context_description)
    for section in doc.sections:
        n = section.number
        lines += gap
        lines.append(f"<context_{n}>")
        first = True
        for sub in SUBSECTIONS:
            payload = getattr(section, sub)
            if payload is None:
                continue
            if not first:
                lines += gap
            first = False
            lines += _block(f"context_{n}_{sub}", payload)
        lines.append(f"</context_{n}>")
    lines.append(f"</{ROOT_TAG}>")
    text = "\n".join(lines) + "\n"
    return text.replace("\r\n", "\n")


# -- parsing -----------------------------------------------------------------


def _classify(line: str):
    """Return ``(closing, name)`` if the line is a tag sentinel, else None."""
    m = _TAG_LINE.match(line)
    if not m:
        return None
    closing, name = bool(m.group(1)), m.group(2)
    if name in (ROOT_TAG, DESCRIPTION_TAG):
        return closing, name
    sm = _SECTION_TAG.match(name)
    if sm and (sm.group(2) is None or sm.group(2) in SUBSECTIONS
               or sm.group(2) in LEGACY_SUBSECTIONS):
        return closing, name
    return None


def _parse_rules(lines: list[str], diagnostics: list[LintDiagnostic]) -> list[str]:
    rules = []
    numbers = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or _RULES_HEADER.match(line):
            continue
        m = _RULE_LINE.match(line)
        if m:
            numbers.append(int(m.group(1)))
            rules.append(m.group(2))
        else:
            numbers.append(None)
            rules.append(line.strip())
            diagnostics.append(_diag(
                "StrayText", "preamble line is not a 'Rule number N:' line", line=lineno))
    if numbers and numbers != list(range(1, len(numbers) + 1)):
        diagnostics.append(_diag("RuleNumbering", line=1))
    return rules


class _Section:
    def __init__(self, number: int, line: int):
        self.number = number
        self.line = line
        self.parts: dict[str, str] = {}

    def freeze(self) -> ContextSection:
        return ContextSection(self.number, *(self.parts.get(s) for s in SUBSECTIONS))


def parse(text: str) -> tuple[ReadMeLlmDoc, list[LintDiagnostic]]:
    """Parse ReadMe.LLM text, recovering from structural damage.

    Returns the best-effort document and the structural diagnostics found
    on the way.  Only a missing root is unrecoverable; it yields an empty
    document and a ``RootMissing`` error.
    """
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    diagnostics: list[LintDiagnostic] = []

    root = next((i for i, ln in enumerate(lines) if _classify(ln) == (False, ROOT_TAG)), None)
    if root is None:
        return ReadMeLlmDoc(), [_diag("RootMissing")]

    rules = _parse_rules(lines[:root], diagnostics)
    description: Optional[str] = None
    sections: list[_Section] = []
    section: Optional[_Section] = None
    # open payload block: (tag name, canonical subsection or None, start line)
    payload: Optional[tuple[str, Optional[str], int]] = None
    buf: list[str] = []
    closed_at = None
    legacy_seen = False

    def close_payload():
        nonlocal payload, description
        name, sub, _ = payload
        body = "\n".join(buf)
        if sub is None:
            description = body
        elif section is not None:
            section.parts[sub] = body
        payload = None
        buf.clear()

    def close_section():
        nonlocal section
        section = None

    for i in range(root + 1, len(lines)):
        lineno = i + 1
        line = lines[i]
        tag = _classify(line)
        if payload is not None:
            if tag is None:
                buf.append(line)
                continue
            closing, name = tag
            if closing and name == payload[0]:
                close_payload()
                continue
            # a structural tag interrupts the open payload
            diagnostics.append(_diag(
                "UnclosedTag", f"<{payload[0]}> (opened on line {payload[2]}) is not closed",
                line=lineno))
            close_payload()
        if tag is None:
            if line.strip():
                diagnostics.append(_diag("StrayText", line=lineno))
            continue
        closing, name = tag
        if name == ROOT_TAG:
            if closing:
                if section is not None:
                    diagnostics.append(_diag(
                        "UnclosedTag", f"<context_{section.number}> is not closed", line=lineno))
                    close_section()
                closed_at = i
                break
            diagnostics.append(_diag("UnexpectedTag", "nested <ReadMe.LLM>", line=lineno))
            continue
        if name == DESCRIPTION_TAG:
            if closing:
                diagnostics.append(_diag("UnmatchedCloseTag", f"</{name}>", line=lineno))
            elif section is not None or sections:
                diagnostics.append(_diag(
                    "UnexpectedTag", "<context_description> after sections", line=lineno))
                payload = (name, None, lineno)
            else:
                if description is not None:
                    diagnostics.append(_diag("DuplicateBlock", f"<{name}>", line=lineno))
                payload = (name, None, lineno)
            continue
        sm = _SECTION_TAG.match(name)
        number, sub = int(sm.group(1)), sm.group(2)
        if sub is None:
            if closing:
                if section is not None and section.number == number:
                    close_section()
                else:
                    diagnostics.append(_diag("UnmatchedCloseTag", f"</{name}>", line=lineno))
                continue
            if section is not None:
                diagnostics.append(_diag(
                    "UnclosedTag", f"<context_{section.number}> is not closed", line=lineno))
                close_section()
            if any(s.number == number for s in sections):
                diagnostics.append(_diag("DuplicateBlock", f"<{name}>", line=lineno))
            section = _Section(number, lineno)
            sections.append(section)
            continue
        if sub in LEGACY_SUBSECTIONS:
            if not legacy_seen:
                diagnostics.append(_diag("LegacyTagDialect", f"<{name}>", line=lineno))
                legacy_seen = True
            sub = LEGACY_SUBSECTIONS[sub]
        if closing:
            diagnostics.append(_diag("UnmatchedCloseTag", f"</{name}>", line=lineno))
            continue
        if section is None or section.number != number:
            diagnostics.append(_diag(
                "UnexpectedTag", f"<{name}> outside <context_{number}>", line=lineno))
            section = next((s for s in sections if s.number == number), None)
            if section is None:
                section = _Section(number, lineno)
                sections.append(section)
        if sub in section.parts:
            diagnostics.append(_diag("DuplicateBlock", f"<{name}>", line=lineno))
        payload = (name, sub, lineno)

    if payload is not None:
        diagnostics.append(_diag(
            "UnclosedTag", f"<{payload[0]}> (opened on line {payload[2]}) is not closed"))
        close_payload()
    if closed_at is None:
        diagnostics.append(_diag("RootNotClosed", line=len(lines)))
    elif any(ln.strip() for ln in lines[closed_at + 1:]):
        diagnostics.append(_diag("TrailingContent", line=closed_at + 2))

    doc = ReadMeLlmDoc(
        rules=tuple(rules),
        context_description=description or "",
        sections=tuple(s.freeze() for s in sections),
    )
    return doc, diagnostics


# -- lint --------------------------------------------------------------------


def lint(doc: ReadMeLlmDoc) -> list[LintDiagnostic]:
    """Check ``doc`` against the catalogued document rules."""
    found: list[LintDiagnostic] = []
    if not doc.rules:
        found.append(_diag("MissingRules", section=0))
    for position, section in enumerate(doc.sections, 1):
        n = section.number
        if n != position:
            found.append(_diag(
                "NonContiguousNumbering",
                f"section {n} is in position {position}", section=n))
        for sub in SUBSECTIONS:
            if getattr(section, sub) is None:
                found.append(_diag(
                    "SubsectionMissing", f"<context_{n}_{sub}> is missing", section=n))
        if section.code_snippet is not None and not section.code_snippet.strip():
            found.append(_diag("EmptyCodeSnippet", section=n))
        if section.examples is not None and not section.examples.strip():
            found.append(_diag("EmptyExamples", section=n))
    # stable sort keeps rule order within a location
    return sorted(found, key=lambda d: d.section or 0)


def check_text(text: str) -> tuple[ReadMeLlmDoc, list[LintDiagnostic]]:
    """Parse then lint; diagnostics from both passes, parse first."""
    doc, diagnostics = parse(text)
    if any(d.code == "RootMissing" for d in diagnostics):
        return doc, diagnostics
    return doc, diagnostics + lint(doc)


def is_valid(doc: ReadMeLlmDoc) -> bool:
    """True when ``render`` of ``doc`` parses back to an equal document."""
    if [s.number for s in doc.sections] != list(range(1, len(doc.sections) + 1)):
        return False
    for rule in doc.rules:
        if not rule or rule != rule.strip() or "\n" in rule or "\r" in rule:
            return False
    payloads = [doc.context_description]
    for s in doc.sections:
        payloads += [getattr(s, sub) for sub in SUBSECTIONS]
    for p in payloads:
        if p is None or "\r" in p:
            return False
        if any(_classify(ln) is not None for ln in p.split("\n")):
            return False
    return True
