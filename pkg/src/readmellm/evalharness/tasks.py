from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Optional, Union

if TYPE_CHECKING:
    from readmellm.evalharness.executors import ExecutionReport


@dataclass(frozen=True)
class SuccessCheck:
    """Machine-decidable pass criterion applied after a clean run."""

    exit_status: int = 0
    expected_files: tuple[str, ...] = ()    # glob patterns, each must match a created file
    stdout_contains: tuple[str, ...] = ()
    script: Optional[str] = None            # python source; exit 0 means pass

    def evaluate(self, report: "ExecutionReport") -> tuple[bool, str]:
        from fnmatch import fnmatchcase

        if report.exit_code != self.exit_status:
            return False, f"exit status {report.exit_code} != {self.exit_status}"
        for pattern in self.expected_files:
            if not any(fnmatchcase(f, pattern) for f in report.files):
                return False, f"no output file matches {pattern!r}"
        for needle in self.stdout_contains:
            if needle not in report.stdout:
                return False, f"stdout lacks {needle!r}"
        if self.script is not None and report.check_exit != 0:
            return False, f"check script failed: {report.check_output.strip()[:200]}"
        return True, ""


@dataclass(frozen=True)
class EvalTask:
    id: str
    prompt: str
    target_library: str
    success_check: SuccessCheck = field(default_factory=SuccessCheck)
    # relative path -> file content, copied into the scratch directory
    workspace: Mapping[str, Union[str, bytes]] = field(default_factory=dict)
    required_symbols: tuple[str, ...] = ()

    def materialize(self, directory: Path) -> None:
        for rel, content in self.workspace.items():
            dest = directory / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(content, bytes):
                dest.write_bytes(content)
            else:
                dest.write_text(content, encoding="utf-8")
