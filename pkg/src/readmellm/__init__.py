"""Generate, lint and budget LLM-oriented library documentation (ReadMe.LLM)
and measure its effect on code generation."""

from readmellm.docmodel import (
    ContextSection,
    LintDiagnostic,
    ReadMeLlmDoc,
    RenderOptions,
    lint,
    parse,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "ContextSection",
    "LintDiagnostic",
    "ReadMeLlmDoc",
    "RenderOptions",
    "lint",
    "parse",
    "render",
]
