"""``readmellm`` command line: generate, lint, combo, eval and report.

Exit codes: 0 success, 1 lint errors or an empty result set, 2 nothing to
generate, 3 budget unsatisfiable (file still written), 64 bad usage,
config or missing input.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Callable, Optional, Sequence

from readmellm import docmodel
from readmellm.assemble import (
    ALL_COMBOS,
    EXAMPLES,
    FUNCTIONS,
    README_MD,
    BudgetPolicy,
    EmptyDocError,
    MissingAssetError,
    build_context_combo,
    build_readme_llm,
    combo_name,
    enforce_budget,
    examples_asset,
    functions_asset,
    parse_combo,
)
from readmellm.config import ConfigError, ToolConfig, load_config
from readmellm.evalharness import (
    ChatCompletionsClient,
    EmptyResultsError,
    FakeExecutor,
    ScriptedClient,
    SubprocessExecutor,
    load_results,
    report,
    run_suite,
    success_rate,
)
from readmellm.extract import FULL, MODES, mine_examples, pair_examples, scan_sources

log = logging.getLogger("readmellm")

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_EMPTY_DOC = 2
EXIT_UNSATISFIABLE = 3
EXIT_USAGE = 64


def _forward_warnings(caught) -> None:
    for w in caught:
        log.warning("%s", w.message)


def _need_source_root(config: ToolConfig) -> Path:
    if config.source_root is None:
        raise ConfigError("source_root is required for this command")
    return config.source_root


def _base_dir(config: Optional[ToolConfig]) -> Path:
    return config.path.parent if config and config.path else Path.cwd()


def build_document(config: ToolConfig, mode: Optional[str] = None,
                   budget: Optional[BudgetPolicy] = None):
    """Scan, assemble and budget; returns ``(doc, degradation_report)``."""
    root = _need_source_root(config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        symbols = scan_sources(root, config.profile, public_only=config.public_only)
        examples = mine_examples(root, config.profile)
        doc = build_readme_llm(symbols, examples, pair_examples(symbols, examples),
                               config.grouping, mode or config.mode)
    _forward_warnings(caught)
    log.info("scanned %d symbols and %d examples under %s", len(symbols), len(examples), root)
    budget = budget or config.budget
    if budget is None:
        return doc, None
    return enforce_budget(doc, budget)


def cmd_generate(config: ToolConfig, mode: Optional[str] = None,
                 budget: Optional[BudgetPolicy] = None, output: Optional[Path] = None) -> int:
    try:
        doc, degradation = build_document(config, mode, budget)
    except EmptyDocError as exc:
        print(f"error: {exc}; nothing written", file=sys.stderr)
        return EXIT_EMPTY_DOC
    target = output or config.output or (
        _base_dir(config) / f"{config.grouping.library_name}.ReadMe.LLM")
    target.write_text(docmodel.render(doc), encoding="utf-8", newline="\n")
    for d in docmodel.lint(doc):
        log.warning("%s: %s", target.name, d)
    print(f"wrote {target} ({len(doc.sections)} sections)")
    if degradation is not None:
        print(degradation)
        if degradation.unsatisfiable:
            return EXIT_UNSATISFIABLE
    return EXIT_OK


def cmd_lint(path: Path) -> int:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (FileNotFoundError, IsADirectoryError):
        print(f"error: {path}: no such file", file=sys.stderr)
        return EXIT_USAGE
    _, diagnostics = docmodel.check_text(text)
    for d in diagnostics:
        print(f"{path}: {d}")
    errors = sum(1 for d in diagnostics if d.severity == docmodel.ERROR)
    print(f"{path}: {errors} error(s), {len(diagnostics) - errors} warning(s)")
    return EXIT_ERRORS if docmodel.has_errors(diagnostics) else EXIT_OK


class _Assets(dict):
    """Ablation assets built on first use from files or the source tree."""

    def __init__(self, config: ToolConfig):
        super().__init__()
        self.config = config

    def _derive(self, name: str) -> Optional[str]:
        explicit = getattr(self.config.combo, name)
        if explicit is not None:
            return explicit.read_text(encoding="utf-8")
        root = self.config.source_root
        if root is None:
            return None
        if name == README_MD:
            readme = next((p for p in sorted(root.iterdir())
                           if p.name.lower() == "readme.md"), None)
            return readme.read_text(encoding="utf-8") if readme else None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if name == FUNCTIONS:
                text = functions_asset(scan_sources(root, self.config.profile,
                                                    public_only=self.config.public_only), FULL)
            else:
                text = examples_asset(mine_examples(root, self.config.profile))
        _forward_warnings(caught)
        return text

    def get(self, name, default=None):
        if name not in self:
            self[name] = self._derive(name)
        return self[name]


def cmd_combo(config: ToolConfig, name: Optional[str], output: Optional[Path] = None) -> int:
    assets = _Assets(config)
    combos = ALL_COMBOS if name is None else (parse_combo(name),)
    out_dir = config.combo.output_dir or _base_dir(config)
    for combo in combos:
        text = build_context_combo(assets, combo)
        target = output if (output and name is not None) else out_dir / f"{combo_name(combo)}.txt"
        target.write_text(text, encoding="utf-8", newline="\n")
        print(f"wrote {target} ({len(text)} characters)")
    return EXIT_OK


def _make_client(spec):
    opts = dict(spec.options)
    if spec.kind == "scripted":
        return ScriptedClient(spec.model_id, opts["script"], opts.get("capability", "scripted"))
    return ChatCompletionsClient(spec.model_id, **opts)


def cmd_eval(config: ToolConfig, repeats: Optional[int] = None,
             results: Optional[Path] = None, workers: Optional[int] = None) -> int:
    ev = config.eval
    if ev is None:
        raise ConfigError("config has no eval section")
    assets = _Assets(config)
    contexts = {}
    for spec in ev.contexts:
        if spec.kind == "file":
            contexts[spec.label] = spec.path.read_text(encoding="utf-8")
        elif spec.kind == "combo":
            contexts[spec.label] = build_context_combo(assets, spec.combo)
        else:
            doc, _ = build_document(config)
            contexts[spec.label] = docmodel.render(doc)
    clients = [_make_client(c) for c in ev.clients]
    executor: Callable = FakeExecutor if ev.executor == "fake" else (
        lambda: SubprocessExecutor(timeout=ev.timeout))
    path = results or ev.results
    out = run_suite(ev.tasks, contexts, clients, repeats or ev.repeats, executor=executor,
                    results_path=path, workers=workers or ev.workers,
                    max_debug_rounds=ev.max_debug_rounds, no_code=ev.no_code)
    print(f"{len(out)} trial results in {path}")
    errors = sum(1 for r in out if not r.counted)
    if errors:
        print(f"warning: {errors} trial(s) hit a client error and are excluded from rates",
              file=sys.stderr)
    try:
        print(report(success_rate(out), "markdown"), end="")
    except EmptyResultsError:
        pass
    return EXIT_OK


def cmd_report(results_path: Path, fmt: str = "markdown", output: Optional[Path] = None) -> int:
    if not Path(results_path).is_file():
        print(f"error: {results_path}: no such file", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = report(success_rate(load_results(results_path)), fmt)
    except EmptyResultsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERRORS
    if output:
        output.write_text(text, encoding="utf-8", newline="\n")
    else:
        print(text, end="")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS,
                        help="YAML tool config")
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="readmellm", parents=[common],
                                     description="Build and evaluate ReadMe.LLM documents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a ReadMe.LLM file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--budget", type=int, metavar="N", help="size budget")
    p.add_argument("--unit", choices=("characters", "approx_tokens"))
    p.add_argument("--output", "-o", type=Path)

    p = sub.add_parser("lint", parents=[common], help="check a ReadMe.LLM file")
    p.add_argument("path", type=Path)

    p = sub.add_parser("combo", parents=[common], help="write an ablation context")
    p.add_argument("name", nargs="?", help="e.g. none, readme_md+functions; omit for all eight")
    p.add_argument("--output", "-o", type=Path)

    p = sub.add_parser("eval", parents=[common], help="run the evaluation suite")
    p.add_argument("--repeats", type=int)
    p.add_argument("--results", type=Path)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("report", parents=[common], help="success-rate table from results")
    p.add_argument("results", type=Path, nargs="?")
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--output", "-o", type=Path)
    return parser


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if verbose else logging.WARNING)
    log.propagate = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    _setup_logging(getattr(args, "verbose", False))
    config_path = getattr(args, "config", None)
    try:
        if args.command == "lint":
            return cmd_lint(args.path)
        if args.command == "report":
            results = args.results
            if results is None:
                if config_path is None:
                    raise ConfigError("report needs a results path or --config with eval.results")
                ev = load_config(config_path).eval
                results = ev.results if ev else None
                if results is None:
                    raise ConfigError("config has no eval.results")
            return cmd_report(results, args.format, args.output)
        if config_path is None:
            raise ConfigError(f"{args.command} requires --config")
        config = load_config(config_path)
        if args.command == "generate":
            budget = None
            if args.budget is not None:
                unit = args.unit or (config.budget.unit if config.budget else "characters")
                budget = BudgetPolicy(args.budget, unit)
            elif args.unit and config.budget:
                budget = BudgetPolicy(config.budget.max_units, args.unit)
            return cmd_generate(config, args.mode, budget, args.output)
        if args.command == "combo":
            return cmd_combo(config, args.name, args.output)
        return cmd_eval(config, args.repeats, args.results, args.workers)
    except (ConfigError, MissingAssetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # malformed combo names, budgets and the like
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
