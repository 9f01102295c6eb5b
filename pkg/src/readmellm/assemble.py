"""Assemble ReadMe.LLM documents and ablation contexts from extracted assets."""

from __future__ import annotations

import dataclasses
import fnmatch
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from readmellm.docmodel import ContextSection, ReadMeLlmDoc, RenderOptions, render
from readmellm.extract import (
    FULL,
    MODES,
    SIGNATURE_ONLY,
    ApiSymbol,
    ExampleSnippet,
    extract_signature,
    strip_to_signatures,
)


class EmptyDocError(ValueError):
    """The grouping config has no groups, so there is nothing to document."""


class MissingAssetError(KeyError):
    pass


class AssembleWarning(UserWarning):
    """A member pattern resolved to no symbols (``UnresolvedPattern``)."""


@dataclass(frozen=True)
class Group:
    description: str
    members: tuple[str, ...] = ()


@dataclass(frozen=True)
class GroupingConfig:
    library_name: str
    library_description: str = ""
    groups: tuple[Group, ...] = ()
    # user override for the generated opening paragraph
    context_description: Optional[str] = None


CHARACTERS = "characters"
APPROX_TOKENS = "approx_tokens"


@dataclass(frozen=True)
class BudgetPolicy:
    max_units: int
    unit: str = CHARACTERS

    def __post_init__(self):
        if self.max_units <= 0:
            raise ValueError("max_units must be positive")
        if self.unit not in (CHARACTERS, APPROX_TOKENS):
            raise ValueError(f"unknown budget unit {self.unit!r}")

    def measure(self, text: str) -> int:
        if self.unit == APPROX_TOKENS:
            return math.ceil(len(text) / 4)
        return len(text)


@dataclass(frozen=True)
class DegradationStep:
    action: str                 # "signature_only" or "drop_section"
    size_before: int
    size_after: int
    section: Optional[int] = None


@dataclass
class DegradationReport:
    budget: int
    unit: str
    initial_size: int
    final_size: int
    steps: list[DegradationStep] = field(default_factory=list)
    unsatisfiable: bool = False

    def __str__(self):
        lines = [f"size {self.initial_size} {self.unit}, budget {self.budget}"]
        for step in self.steps:
            what = step.action if step.section is None else f"{step.action} {step.section}"
            lines.append(f"  {what}: {step.size_before} -> {step.size_after}")
        if self.unsatisfiable:
            lines.append(f"  unsatisfiable: maximally degraded size is {self.final_size}")
        elif not self.steps:
            lines.append("  within budget, unchanged")
        return "\n".join(lines)


# -- rules and description ---------------------------------------------------


def default_rules(library_name: str) -> list[str]:
    if not library_name.strip():
        raise ValueError("library_name must be non-empty")
    return [
        "When you are unsure about something, ask the user what information you need.",
        f"Reuse {library_name} functions and code when applicable",
        "Consider library dependencies when generating code solutions",
    ]


def default_context_description(config: GroupingConfig) -> str:
    """Opening paragraph of a generated document (tool-written template)."""
    if config.context_description is not None:
        return config.context_description
    name = config.library_name
    parts = [f"The context will be for the {name} library."]
    if config.library_description.strip():
        parts.append(config.library_description.strip())
    parts.append(
        f"The context I am giving you will be functions and examples from the {name} "
        "library, organized into numbered sections in order using XML tags. Within each "
        "section, there is a context description for that section, a code snippet, and "
        "use case examples.")
    return " ".join(parts)


# -- building ----------------------------------------------------------------


def _matches(qualified_name: str, pattern: str) -> bool:
    return (fnmatch.fnmatchcase(qualified_name, pattern)
            or fnmatch.fnmatchcase(qualified_name, "*." + pattern))


def resolve_members(symbols: Sequence[ApiSymbol], patterns: Sequence[str]) -> list[ApiSymbol]:
    """Symbols matched by ``patterns``, in pattern order, without duplicates.

    Methods whose class is also selected are dropped because the class
    rendering already contains them.
    """
    chosen: list[ApiSymbol] = []
    seen = set()
    for pattern in patterns:
        hits = [s for s in symbols if _matches(s.qualified_name, pattern)]
        if not hits:
            warnings.warn(f"UnresolvedPattern: {pattern!r} matched no symbols",
                          AssembleWarning, stacklevel=3)
        for s in hits:
            if s.qualified_name not in seen:
                seen.add(s.qualified_name)
                chosen.append(s)
    classes = {s.qualified_name for s in chosen if s.kind == "class"}

    def covered(sym: ApiSymbol) -> bool:
        parent = sym.parent
        while parent:
            if parent in classes:
                return True
            parent = parent.rpartition(".")[0] or None
        return False

    return [s for s in chosen if not covered(s)]


def render_example(example: ExampleSnippet) -> str:
    if example.kind == "script":
        return example.body
    fence = "```" + example.language
    text = f"{fence}\n{example.body}\n```"
    if example.label:
        text = f'=== "{example.label}"\n{text}'
    return text


def build_readme_llm(
    symbols: Sequence[ApiSymbol],
    examples: Sequence[ExampleSnippet],
    pairing: Mapping[str, Sequence[ExampleSnippet]],
    config: GroupingConfig,
    mode: str = SIGNATURE_ONLY,
) -> ReadMeLlmDoc:
    """Interleave group descriptions, symbol code and paired examples.

    Section ``n`` documents ``config.groups[n-1]``.  Examples shared by
    several members of a group appear once, in member order.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if not config.groups:
        raise EmptyDocError(f"no groups configured for {config.library_name}")
    sections = []
    for number, group in enumerate(config.groups, 1):
        members = resolve_members(symbols, group.members)
        snippet = "\n\n".join(extract_signature(s, mode) for s in members)
        seen: set[str] = set()
        rendered: list[str] = []
        for sym in members:
            for ex in pairing.get(sym.qualified_name, ()):
                if ex.body not in seen:
                    seen.add(ex.body)
                    rendered.append(render_example(ex))
        sections.append(ContextSection(number, group.description, snippet, "\n\n".join(rendered)))
    return ReadMeLlmDoc(
        rules=tuple(default_rules(config.library_name)),
        context_description=default_context_description(config),
        sections=tuple(sections),
    )


# -- budget ------------------------------------------------------------------


def _to_signature_only(doc: ReadMeLlmDoc) -> ReadMeLlmDoc:
    sections = tuple(
        dataclasses.replace(s, code_snippet=strip_to_signatures(s.code_snippet))
        if s.code_snippet else s
        for s in doc.sections
    )
    return dataclasses.replace(doc, sections=sections)


def enforce_budget(doc: ReadMeLlmDoc, policy: BudgetPolicy,
                   options: RenderOptions = RenderOptions()) -> tuple[ReadMeLlmDoc, DegradationReport]:
    """Degrade ``doc`` until its rendering fits ``policy``.

    Signature-only code first, then whole sections from the last one
    backwards.  When nothing fits the maximally degraded document is
    returned with ``report.unsatisfiable`` set.
    """
    size = policy.measure(render(doc, options))
    report = DegradationReport(policy.max_units, policy.unit, size, size)
    if size <= policy.max_units:
        return doc, report

    candidate = _to_signature_only(doc)
    new_size = policy.measure(render(candidate, options))
    if candidate != doc:
        report.steps.append(DegradationStep(SIGNATURE_ONLY, size, new_size))
        doc, size = candidate, new_size

    while size > policy.max_units and doc.sections:
        dropped = doc.sections[-1].number
        doc = dataclasses.replace(doc, sections=doc.sections[:-1])
        new_size = policy.measure(render(doc, options))
        report.steps.append(DegradationStep("drop_section", size, new_size, dropped))
        size = new_size

    report.final_size = size
    report.unsatisfiable = size > policy.max_units
    return doc, report


# -- ablation contexts -------------------------------------------------------

README_MD = "readme_md"
FUNCTIONS = "functions"
EXAMPLES = "examples"
ASSETS = (README_MD, FUNCTIONS, EXAMPLES)
_LABELS = {README_MD: "ReadMe.md", FUNCTIONS: "Functions", EXAMPLES: "Examples"}

#: The eight context combinations in a fixed, report-friendly order.
ALL_COMBOS: tuple[frozenset, ...] = (
    frozenset(),
    frozenset({README_MD}),
    frozenset({FUNCTIONS}),
    frozenset({EXAMPLES}),
    frozenset({README_MD, FUNCTIONS}),
    frozenset({README_MD, EXAMPLES}),
    frozenset({FUNCTIONS, EXAMPLES}),
    frozenset(ASSETS),
)


def combo_name(combo) -> str:
    """Machine name, e.g. ``none`` or ``readme_md+functions``."""
    return "+".join(a for a in ASSETS if a in combo) or "none"


def combo_label(combo) -> str:
    """Human label, e.g. ``No Context`` or ``ReadMe.md + Functions``."""
    return " + ".join(_LABELS[a] for a in ASSETS if a in combo) or "No Context"


def parse_combo(name: str) -> frozenset:
    name = name.strip()
    if name in ("", "none"):
        return frozenset()
    parts = frozenset(p.strip() for p in name.split("+"))
    unknown = parts - set(ASSETS)
    if unknown:
        raise ValueError(f"unknown context asset(s): {', '.join(sorted(unknown))}")
    return parts


def build_context_combo(assets: Mapping[str, Optional[str]], combo) -> str:
    """Concatenate the selected assets, ``readme_md``, ``functions``, ``examples``.

    Assets are separated by one blank line; the empty combination gives
    an empty string.
    """
    pieces = []
    for name in ASSETS:
        if name not in combo:
            continue
        text = assets.get(name)
        if text is None:
            raise MissingAssetError(name)
        pieces.append(text.rstrip("\n"))
    return "\n\n".join(pieces) + "\n" if pieces else ""


def functions_asset(symbols: Sequence[ApiSymbol], mode: str = FULL) -> str:
    """The "functions" ablation asset: code of the given symbols."""
    if not symbols:
        return ""
    return "\n\n".join(extract_signature(s, mode) for s in resolve_members(symbols, ["*"]))


def examples_asset(examples: Sequence[ExampleSnippet]) -> str:
    seen: set[str] = set()
    out: list[str] = []
    for ex in examples:
        if ex.body not in seen:
            seen.add(ex.body)
            out.append(render_example(ex))
    return "\n\n".join(out)
