"""Success-rate tables over trial results, as CSV or a markdown matrix."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from readmellm.evalharness.harness import TrialResult


class EmptyResultsError(ValueError):
    pass


@dataclass
class Cell:
    trials: int = 0
    successes: int = 0

    @property
    def rate(self) -> Fraction:
        return Fraction(self.successes, self.trials)


@dataclass
class SuccessTable:
    # (model_id, context) -> Cell, in first-seen order
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)

    @property
    def models(self) -> list[str]:
        return list(dict.fromkeys(m for m, _ in self.cells))

    @property
    def contexts(self) -> list[str]:
        return list(dict.fromkeys(c for _, c in self.cells))

    def rate(self, model_id: str, context: str) -> Fraction:
        return self.cells[(model_id, context)].rate


def success_rate(results: Iterable[TrialResult]) -> SuccessTable:
    """Count successes per (model, context); ClientError trials are excluded."""
    table = SuccessTable()
    for r in results:
        if not r.counted:
            continue
        cell = table.cells.setdefault((r.model_id, r.context), Cell())
        cell.trials += 1
        cell.successes += int(r.success)
    if not table.cells:
        raise EmptyResultsError("no countable trial results")
    return table


def format_rate(rate: Fraction) -> str:
    text = f"{float(rate):.6f}".rstrip("0")
    return text + "0" if text.endswith(".") else text


def _percent(rate: Fraction) -> str:
    pct = rate * 100
    return f"{pct.numerator // pct.denominator}%" if pct.denominator == 1 else f"{float(pct):.1f}%"


def report(table: SuccessTable, format: str = "csv") -> str:
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model_id", "context", "trials", "successes", "rate"])
        for (model, context), cell in table.cells.items():
            writer.writerow([model, context, cell.trials, cell.successes, format_rate(cell.rate)])
        return buf.getvalue()
    if format == "markdown":
        contexts = table.contexts
        lines = ["| Model | " + " | ".join(contexts) + " |",
                 "|---|" + "---|" * len(contexts)]
        for model in table.models:
            row = []
            for context in contexts:
                cell = table.cells.get((model, context))
                row.append(f"{_percent(cell.rate)} ({cell.successes}/{cell.trials})"
                           if cell else "n/a")
            lines.append(f"| {model} | " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
