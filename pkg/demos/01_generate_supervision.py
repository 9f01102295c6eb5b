"""
Generating a ReadMe.LLM for a small Supervision-like tree
=========================================================

Scan the sources, mine the docs for examples, then group everything
with the shipped Supervision preset.
"""

from pathlib import Path

from readmellm import lint, render
from readmellm.assemble import build_readme_llm
from readmellm.config import load_preset, parse_config
from readmellm.extract import mine_examples, pair_examples, scan_sources

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "mini_supervision"

# public definitions only; private helpers such as _box_non_max_suppression stay out
symbols = scan_sources(ROOT, public_only=True)
print(f"{len(symbols)} symbols, for instance:")
for sym in symbols[:5]:
    print(f"  {sym.kind:8} {sym.qualified_name}")

# fenced python blocks from docs/, labelled by heading or tab title
examples = mine_examples(ROOT)
print(f"\n{len(examples)} examples:", ", ".join(repr(e.label) for e in examples))

# an example is paired with every symbol whose name it mentions
pairing = pair_examples(symbols, examples)
print("\ncrop_image is shown by:",
      [e.label for e in pairing["supervision.utils.image.crop_image"]])

# the preset supplies the library name and three member groups
config = parse_config(load_preset("supervision"), ROOT).grouping
doc = build_readme_llm(symbols, examples, pairing, config)

text = render(doc)
print(f"\nrendered {len(text)} characters in {len(doc.sections)} sections; lint: {lint(doc)}")
print("\n".join(text.splitlines()[:30]))
