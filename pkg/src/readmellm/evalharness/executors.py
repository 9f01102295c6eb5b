"""Code executors: a process-isolated runner and a deterministic fake."""

from __future__ import annotations

import os
import re
import subprocess
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Protocol

from readmellm.evalharness.tasks import EvalTask


@dataclass(frozen=True)
class ExecutionReport:
    exit_code: int
    stdout: str = ""
    stderr: str = ""
    timed_out: bool = False
    files: tuple[str, ...] = ()         # workspace-relative, sorted
    check_exit: Optional[int] = None    # exit status of the task's check script
    check_output: str = ""

    @property
    def ok(self) -> bool:
        return not self.timed_out and self.exit_code == 0

    def error_text(self) -> str:
        if self.timed_out:
            return "Execution timed out."
        return self.stderr.strip() or f"Process exited with status {self.exit_code}."

    def to_dict(self) -> dict:
        d = asdict(self)
        d["files"] = list(self.files)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionReport":
        return cls(**{**d, "files": tuple(d.get("files", ()))})


class CodeExecutor(Protocol):
    def run(self, code: str, task: EvalTask) -> ExecutionReport: ...


def _limit_cpu(seconds: int):
    def apply():
        try:
            import resource
            resource.setrlimit(resource.RLIMIT_CPU, (seconds, seconds))
        except (ImportError, ValueError, OSError):
            pass
    return apply


class SubprocessExecutor:
    """Run generated code with a fresh interpreter in a scratch directory.

    The task workspace is copied in first; the task's check script (if any)
    runs afterwards in the same directory.
    """

    def __init__(self, timeout: float = 60.0, cpu_seconds: Optional[int] = None,
                 python: str = sys.executable, keep_dir: Optional[Path] = None):
        self.timeout = timeout
        self.cpu_seconds = cpu_seconds or int(timeout) + 1
        self.python = python
        self.keep_dir = keep_dir

    def _run(self, script: str, cwd: Path):
        env = dict(os.environ, PYTHONDONTWRITEBYTECODE="1", MPLBACKEND="Agg")
        preexec = _limit_cpu(self.cpu_seconds) if os.name == "posix" else None
        return subprocess.run(
            [self.python, script], cwd=cwd, capture_output=True, text=True,
            timeout=self.timeout, env=env, preexec_fn=preexec,
        )

    def run(self, code: str, task: EvalTask) -> ExecutionReport:
        with tempfile.TemporaryDirectory(prefix="readmellm-", dir=self.keep_dir) as tmp:
            work = Path(tmp)
            task.materialize(work)
            (work / "_generated.py").write_text(code, encoding="utf-8")
            try:
                proc = self._run("_generated.py", work)
            except subprocess.TimeoutExpired as exc:
                return ExecutionReport(
                    exit_code=-1, stdout=_text(exc.stdout), stderr=_text(exc.stderr),
                    timed_out=True)
            seeded = set(task.workspace)
            files = tuple(sorted(
                p.relative_to(work).as_posix() for p in work.rglob("*")
                if p.is_file() and p.name not in ("_generated.py", "_check.py")
                and p.relative_to(work).as_posix() not in seeded
            ))
            check_exit, check_output = None, ""
            if proc.returncode == 0 and task.success_check.script:
                (work / "_check.py").write_text(task.success_check.script, encoding="utf-8")
                try:
                    check = self._run("_check.py", work)
                    check_exit, check_output = check.returncode, check.stdout + check.stderr
                except subprocess.TimeoutExpired:
                    check_exit, check_output = -1, "check script timed out"
            return ExecutionReport(proc.returncode, proc.stdout, proc.stderr, False, files,
                                   check_exit, check_output)


def _text(data) -> str:
    if data is None:
        return ""
    return data.decode("utf-8", "replace") if isinstance(data, bytes) else data


_MARKER = re.compile(r"^\s*#\s*fake:\s*([\w-]+)\s*(.*?)\s*$", re.M)


class FakeExecutor:
    """Deterministic stand-in that reads outcome markers from the code.

    Recognised comment markers (one per line)::

        # fake: error <message>      exit 1 with <message> on stderr
        # fake: timeout              timed-out run
        # fake: stdout <text>        text printed on stdout
        # fake: files a.png b.png    files the program "created"
        # fake: check-fail           the task's check script fails

    Code without markers succeeds silently.  Nothing is executed.
    """

    def __init__(self):
        self.calls = 0

    def run(self, code: str, task: EvalTask) -> ExecutionReport:
        self.calls += 1
        exit_code, stdout, stderr, timed_out, files = 0, "", "", False, ()
        check_exit = 0 if task.success_check.script else None
        for kind, arg in _MARKER.findall(code):
            if kind == "error":
                exit_code, stderr = 1, arg or "Error"
            elif kind == "timeout":
                exit_code, timed_out = -1, True
            elif kind == "stdout":
                stdout += arg + "\n"
            elif kind == "files":
                files = tuple(sorted(arg.split()))
            elif kind == "check-fail":
                check_exit = 1
        if exit_code != 0:
            check_exit = None
        return ExecutionReport(exit_code, stdout, stderr, timed_out, files, check_exit)
