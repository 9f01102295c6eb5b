"""
A context-ablation run with a scripted model
============================================

Canned responses make every outcome reproducible: success, debugging
rounds, a substitute library and the round cap.
"""

import tempfile
from pathlib import Path

from readmellm.config import load_config
from readmellm.evalharness import FakeExecutor, ScriptedClient, report, run_suite, success_rate

SUITE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "eval" / "suite.yaml"

config = load_config(SUITE)
ev = config.eval
spec = ev.clients[0]
client = ScriptedClient(spec.model_id, spec.options["script"])
print("task:", ev.tasks[0].prompt)
print("contexts:", [c.label for c in ev.contexts])

# contexts are labels here; the scripted client ignores their text
contexts = {c.label: f"(context {c.label})" for c in ev.contexts}

with tempfile.TemporaryDirectory() as tmp:
    results = run_suite(ev.tasks, contexts, [client], ev.repeats, executor=FakeExecutor,
                        results_path=Path(tmp) / "results.jsonl")

# how each trial ended
for r in results[::5]:
    print(f"{r.context:30} repeat {r.repeat}: success={r.success} "
          f"rounds={r.debug_rounds_used} reason={r.failure_reason}")

# one trial that needed all three debugging rounds
trial = next(r for r in results if r.context == "readme_md+functions")
for i, step in enumerate(trial.transcript):
    print(f"\nattempt {i}: exit {step.execution.exit_code}", step.execution.stderr[:60])

table = success_rate(results)
print()
print(report(table, "markdown"))
print(report(table, "csv"))
