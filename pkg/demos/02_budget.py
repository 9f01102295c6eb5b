"""
Fitting a document into a context budget
========================================

Degradation goes in two stages: bodies become signatures, then trailing
sections are dropped.
"""

from pathlib import Path

from readmellm import render
from readmellm.assemble import BudgetPolicy, build_readme_llm, enforce_budget
from readmellm.config import load_preset, parse_config
from readmellm.extract import FULL, mine_examples, pair_examples, scan_sources

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "mini_supervision"

symbols = scan_sources(ROOT, public_only=True)
examples = mine_examples(ROOT)
config = parse_config(load_preset("supervision"), ROOT).grouping

# start from full source so the first stage has something to remove
doc = build_readme_llm(symbols, examples, pair_examples(symbols, examples), config, FULL)
full_size = len(render(doc))
print("full document:", full_size, "characters")

for budget in (full_size, full_size * 3 // 4, full_size // 3, 200):
    out, report = enforce_budget(doc, BudgetPolicy(budget))
    print(f"\n--- budget {budget} ---")
    print(report)
    print("sections kept:", [s.number for s in out.sections])

# the same policy in approximate tokens (characters / 4, rounded up)
out, report = enforce_budget(doc, BudgetPolicy(1200, "approx_tokens"))
print("\n--- 1200 approx tokens ---")
print(report)
