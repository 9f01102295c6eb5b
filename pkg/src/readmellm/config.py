"""YAML tool configuration: loading, preset merging and path validation.

Relative paths resolve against the directory of the config file.  Every
path the commands will read is checked in :func:`load_config`, so a bad
config fails before anything is written.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import yaml

from readmellm.assemble import ALL_COMBOS, BudgetPolicy, Group, GroupingConfig, combo_name, parse_combo
from readmellm.evalharness.harness import (
    DEFAULT_REPEATS,
    MAX_DEBUG_ROUNDS,
    NO_CODE_EXECUTE,
    NO_CODE_FAIL,
)
from readmellm.evalharness.tasks import EvalTask, SuccessCheck
from readmellm.extract import MODES, SIGNATURE_ONLY, PROFILES


class ConfigError(ValueError):
    """Malformed config, unknown keys or unresolved paths."""


@dataclass(frozen=True)
class ComboConfig:
    # an explicit file wins; otherwise the asset is derived from source_root
    readme_md: Optional[Path] = None
    functions: Optional[Path] = None
    examples: Optional[Path] = None
    output_dir: Optional[Path] = None


@dataclass(frozen=True)
class ContextSpec:
    label: str
    kind: str                   # "file", "combo" or "readme_llm"
    path: Optional[Path] = None
    combo: frozenset = frozenset()


@dataclass(frozen=True)
class ClientSpec:
    kind: str                   # "scripted" or "http"
    model_id: str
    options: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EvalConfig:
    tasks: tuple[EvalTask, ...]
    contexts: tuple[ContextSpec, ...]
    clients: tuple[ClientSpec, ...]
    repeats: int = DEFAULT_REPEATS
    executor: str = "subprocess"
    timeout: float = 60.0
    results: Optional[Path] = None
    workers: int = 1
    max_debug_rounds: int = MAX_DEBUG_ROUNDS
    no_code: str = NO_CODE_EXECUTE


@dataclass(frozen=True)
class ToolConfig:
    path: Optional[Path]
    grouping: GroupingConfig
    source_root: Optional[Path] = None
    profile: str = "python"
    public_only: bool = True
    mode: str = SIGNATURE_ONLY
    output: Optional[Path] = None
    budget: Optional[BudgetPolicy] = None
    combo: ComboConfig = ComboConfig()
    eval: Optional[EvalConfig] = None


_TOP_KEYS = {"preset", "library_name", "library_description", "context_description",
             "source_root", "profile", "public_only", "mode", "output", "groups", "budget",
             "combo", "eval"}


def preset_names() -> list[str]:
    folder = resources.files("readmellm") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> dict:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(preset_names())})")
    text = (resources.files("readmellm") / "presets" / f"{name}.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text) or {}


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping")
    return value


def _existing(base: Path, value, where: str, *, directory: bool = False) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where}: expected a path")
    path = (base / value).resolve()
    if not path.exists():
        raise ConfigError(f"{where}: {path} does not exist")
    if directory and not path.is_dir():
        raise ConfigError(f"{where}: {path} is not a directory")
    return path


def _output(base: Path, value, where: str) -> Optional[Path]:
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where}: expected a path")
    path = (base / value).resolve()
    if not path.parent.is_dir():
        raise ConfigError(f"{where}: directory {path.parent} does not exist")
    return path


def _groups(raw) -> tuple[Group, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError("groups: expected a list")
    out = []
    for i, g in enumerate(raw, 1):
        g = _mapping(g, f"groups[{i}]")
        members = g.get("members") or []
        if isinstance(members, str):
            members = [members]
        if not isinstance(g.get("description", ""), str) or not all(
                isinstance(m, str) for m in members):
            raise ConfigError(f"groups[{i}]: description and members must be text")
        out.append(Group(g.get("description", "").strip(), tuple(members)))
    return tuple(out)


def _budget(raw) -> Optional[BudgetPolicy]:
    if raw is None:
        return None
    if isinstance(raw, int):
        raw = {"max_units": raw}
    raw = _mapping(raw, "budget")
    try:
        return BudgetPolicy(int(raw["max_units"]), raw.get("unit", "characters"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"budget: {exc}") from exc


# -- eval section ------------------------------------------------------------


def _load_yaml(path: Path):
    try:
        return yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_tasks(path: Path) -> tuple[EvalTask, ...]:
    """Read a task file: a list of tasks, or a mapping with a ``tasks`` list."""
    raw = _load_yaml(path)
    if isinstance(raw, dict):
        raw = raw.get("tasks")
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a non-empty list of tasks")
    base = path.parent
    tasks = []
    for i, t in enumerate(raw, 1):
        where = f"{path.name}[{i}]"
        t = _mapping(t, where)
        for key in ("id", "prompt", "target_library"):
            if not isinstance(t.get(key), str) or not t[key].strip():
                raise ConfigError(f"{where}: {key} is required")
        check = _mapping(t.get("success_check"), f"{where}.success_check")
        script = check.get("script")
        if "script_file" in check:
            script = _existing(base, check["script_file"], f"{where}.script_file").read_text(
                encoding="utf-8")
        workspace = {}
        for rel, src in _mapping(t.get("workspace"), f"{where}.workspace").items():
            if isinstance(src, dict) and "text" in src:
                workspace[rel] = str(src["text"])
            else:
                workspace[rel] = _existing(base, src, f"{where}.workspace.{rel}").read_bytes()
        tasks.append(EvalTask(
            id=t["id"], prompt=t["prompt"].strip(), target_library=t["target_library"],
            success_check=SuccessCheck(
                exit_status=int(check.get("exit_status", 0)),
                expected_files=tuple(check.get("expected_files", ())),
                stdout_contains=tuple(check.get("stdout_contains", ())),
                script=script,
            ),
            workspace=workspace,
            required_symbols=tuple(t.get("required_symbols", ())),
        ))
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{path}: duplicate task ids")
    return tuple(tasks)


def _contexts(base: Path, raw) -> tuple[ContextSpec, ...]:
    if raw is None or raw == "all_combos":
        return tuple(ContextSpec(combo_name(c), "combo", combo=c) for c in ALL_COMBOS)
    raw = _mapping(raw, "eval.contexts")
    out = []
    for label, value in raw.items():
        where = f"eval.contexts.{label}"
        if isinstance(value, str):
            out.append(ContextSpec(label, "file", _existing(base, value, where)))
        elif isinstance(value, dict) and "combo" in value:
            try:
                out.append(ContextSpec(label, "combo", combo=parse_combo(str(value["combo"]))))
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from exc
        elif isinstance(value, dict) and value.get("readme_llm"):
            out.append(ContextSpec(label, "readme_llm"))
        else:
            raise ConfigError(f"{where}: expected a path, {{combo: ...}} or {{readme_llm: true}}")
    if not out:
        raise ConfigError("eval.contexts: no contexts")
    return tuple(out)


def _clients(base: Path, raw) -> tuple[ClientSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("eval.clients: expected a non-empty list")
    out = []
    for i, c in enumerate(raw, 1):
        where = f"eval.clients[{i}]"
        c = dict(_mapping(c, where))
        kind = c.pop("type", "scripted")
        model_id = c.pop("model_id", None)
        if not isinstance(model_id, str) or not model_id:
            raise ConfigError(f"{where}: model_id is required")
        if kind == "scripted":
            script = c.get("script")
            if isinstance(script, str):
                script = _load_yaml(_existing(base, script, f"{where}.script"))
            if not isinstance(script, dict):
                raise ConfigError(f"{where}: script must be a mapping or a YAML file")
            # keys starting with "_" hold YAML anchors, not responses
            c["script"] = {str(k): [v] if isinstance(v, str) else list(v)
                           for k, v in script.items() if not str(k).startswith("_")}
        elif kind == "http":
            if not isinstance(c.get("endpoint"), str):
                raise ConfigError(f"{where}: endpoint is required")
        else:
            raise ConfigError(f"{where}: unknown client type {kind!r}")
        out.append(ClientSpec(kind, model_id, c))
    ids = [c.model_id for c in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("eval.clients: duplicate model_id")
    return tuple(out)


def _eval(base: Path, raw) -> Optional[EvalConfig]:
    if raw is None:
        return None
    raw = _mapping(raw, "eval")
    if "tasks" not in raw:
        raise ConfigError("eval.tasks is required")
    executor = _mapping(raw.get("executor"), "eval.executor") if not isinstance(
        raw.get("executor"), str) else {"type": raw["executor"]}
    if executor.get("type", "subprocess") not in ("subprocess", "fake"):
        raise ConfigError(f"eval.executor: unknown type {executor.get('type')!r}")
    no_code = raw.get("no_code", NO_CODE_EXECUTE)
    if no_code not in (NO_CODE_EXECUTE, NO_CODE_FAIL):
        raise ConfigError(f"eval.no_code: expected {NO_CODE_EXECUTE!r} or {NO_CODE_FAIL!r}")
    repeats = int(raw.get("repeats", DEFAULT_REPEATS))
    rounds = int(raw.get("max_debug_rounds", MAX_DEBUG_ROUNDS))
    if repeats < 1 or not 0 <= rounds <= MAX_DEBUG_ROUNDS:
        raise ConfigError("eval: repeats must be >= 1 and max_debug_rounds in 0..3")
    return EvalConfig(
        tasks=load_tasks(_existing(base, raw["tasks"], "eval.tasks")),
        contexts=_contexts(base, raw.get("contexts")),
        clients=_clients(base, raw.get("clients")),
        repeats=repeats,
        executor=executor.get("type", "subprocess"),
        timeout=float(executor.get("timeout", 60.0)),
        results=_output(base, raw.get("results", "results.jsonl"), "eval.results"),
        workers=int(raw.get("workers", 1)),
        max_debug_rounds=rounds,
        no_code=no_code,
    )


# -- top level ---------------------------------------------------------------


def parse_config(data: Mapping[str, Any], base: Path, path: Optional[Path] = None) -> ToolConfig:
    data = dict(_mapping(data, "config"))
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    if "preset" in data:
        merged = load_preset(str(data.pop("preset")))
        merged.update(data)
        data = merged

    name = data.get("library_name")
    if not isinstance(name, str) or not name.strip():
        raise ConfigError("library_name is required")
    profile = data.get("profile", "python")
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    mode = data.get("mode", SIGNATURE_ONLY)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}")
    source_root = None
    if data.get("source_root") is not None:
        source_root = _existing(base, data["source_root"], "source_root", directory=True)

    combo_raw = _mapping(data.get("combo"), "combo")
    combo = ComboConfig(**{
        key: _existing(base, combo_raw[key], f"combo.{key}")
        for key in ("readme_md", "functions", "examples") if combo_raw.get(key) is not None
    }, output_dir=_existing(base, combo_raw["output_dir"], "combo.output_dir", directory=True)
        if combo_raw.get("output_dir") else None)

    return ToolConfig(
        path=path,
        grouping=GroupingConfig(
            library_name=name.strip(),
            library_description=str(data.get("library_description") or "").strip(),
            groups=_groups(data.get("groups")),
            context_description=data.get("context_description"),
        ),
        source_root=source_root,
        profile=profile,
        public_only=bool(data.get("public_only", True)),
        mode=mode,
        output=_output(base, data.get("output"), "output"),
        budget=_budget(data.get("budget")),
        combo=combo,
        eval=_eval(base, data.get("eval")),
    )


def load_config(path: Union[str, Path]) -> ToolConfig:
    path = Path(path).resolve()
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    data = _load_yaml(path)
    return parse_config(data or {}, path.parent, path)
