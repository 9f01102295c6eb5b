"""
Linting hand-edited documents
=============================

The parser recovers from damage and says what it had to guess.
"""

from pathlib import Path

from readmellm import parse, render
from readmellm.docmodel import check_text

REFERENCE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "reference_docs"
original = (REFERENCE / "supervision.ReadMe.LLM").read_text(encoding="utf-8")

doc, diagnostics = check_text(original)
print("pristine:", len(doc.sections), "sections,", len(diagnostics), "diagnostics")

# drop one closing tag, as an editor slip would
damaged = original.replace("</context_2>\n", "", 1)
doc, diagnostics = check_text(damaged)
for d in diagnostics:
    print(" ", d)
print("still recovered", len(doc.sections), "sections")

# the older _function/_example tag names are read with a warning
legacy = """<ReadMe.LLM>
<context_description>
Legacy layout.
</context_description>
<context_1>
<context_1_description>
One section.
</context_1_description>
<context_1_function>
def f(): ...
</context_1_function>
<context_1_example>
f()
</context_1_example>
</context_1>
</ReadMe.LLM>
"""
doc, diagnostics = parse(legacy)
print("\nlegacy dialect:", [d.code for d in diagnostics])
print(render(doc))
