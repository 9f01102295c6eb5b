"""Generate -> execute -> debug trials and the batch driver over them."""

from __future__ import annotations

import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from readmellm.evalharness.clients import Conversation, Message, ModelClient
from readmellm.evalharness.executors import CodeExecutor, ExecutionReport
from readmellm.evalharness.tasks import EvalTask
from readmellm.evalharness.utilization import check_library_utilization

log = logging.getLogger(__name__)

MAX_DEBUG_ROUNDS = 3
DEFAULT_REPEATS = 5

EXECUTION_FAILURE = "ExecutionFailure"
WRONG_LIBRARY = "WrongLibrary"
ROUNDS_EXHAUSTED = "RoundsExhausted"
CLIENT_ERROR = "ClientError"


@dataclass(frozen=True)
class TranscriptEntry:
    prompt: str
    response: str
    execution: Optional[ExecutionReport]

    def to_dict(self) -> dict:
        return {"prompt": self.prompt, "response": self.response,
                "execution": self.execution.to_dict() if self.execution else None}

    @classmethod
    def from_dict(cls, d: dict) -> "TranscriptEntry":
        ex = d.get("execution")
        return cls(d["prompt"], d["response"], ExecutionReport.from_dict(ex) if ex else None)


@dataclass(frozen=True)
class TrialResult:
    task_id: str
    model_id: str
    context: str
    repeat: int
    success: bool
    debug_rounds_used: int
    failure_reason: Optional[str] = None
    detail: str = ""
    capability: str = ""
    transcript: tuple[TranscriptEntry, ...] = ()

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.task_id, self.context, self.model_id, self.repeat)

    @property
    def counted(self) -> bool:
        return self.failure_reason != CLIENT_ERROR

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id, "model_id": self.model_id, "context": self.context,
            "repeat": self.repeat, "success": self.success,
            "debug_rounds_used": self.debug_rounds_used,
            "failure_reason": self.failure_reason, "detail": self.detail,
            "capability": self.capability,
            "transcript": [t.to_dict() for t in self.transcript],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialResult":
        return cls(
            task_id=d["task_id"], model_id=d["model_id"], context=d["context"],
            repeat=int(d["repeat"]), success=bool(d["success"]),
            debug_rounds_used=int(d["debug_rounds_used"]),
            failure_reason=d.get("failure_reason"), detail=d.get("detail", ""),
            capability=d.get("capability", ""),
            transcript=tuple(TranscriptEntry.from_dict(t) for t in d.get("transcript", ())),
        )


_FENCE = re.compile(r"^[ \t]*(```|~~~)[^\n]*\n(.*?)^[ \t]*\1[ \t]*$", re.S | re.M)


def extract_code(response: str) -> str:
    """First fenced block of a model response, or the whole response."""
    m = _FENCE.search(response)
    return m.group(2).rstrip("\n") if m else response


def initial_prompt(context_text: str, task_prompt: str) -> str:
    if context_text.strip():
        return f"{context_text.rstrip()}\n\n{task_prompt}"
    return task_prompt


NO_CODE_EXECUTE = "execute"
NO_CODE_FAIL = "fail"
NO_CODE_MESSAGE = "No code block found in the response. Reply with the complete program."


def has_code_block(response: str) -> bool:
    return _FENCE.search(response) is not None


def run_trial(task: EvalTask, context_text: str, client: ModelClient, executor: CodeExecutor,
              *, context: str = "", repeat: int = 0,
              max_debug_rounds: int = MAX_DEBUG_ROUNDS,
              no_code: str = NO_CODE_EXECUTE) -> TrialResult:
    """One trial: generate, execute, and paste errors back up to the round cap.

    A clean run is then judged on library utilization first and on the
    task's success check second.  A response without a fenced block is
    run as-is (``no_code="execute"``) or, with ``no_code="fail"``, scored
    as a failed round without executing anything.
    """
    if no_code not in (NO_CODE_EXECUTE, NO_CODE_FAIL):
        raise ValueError(f"unknown no_code policy {no_code!r}")
    meta = {"task": task.id, "context": context, "repeat": repeat}
    messages = [Message("user", initial_prompt(context_text, task.prompt))]
    transcript: list[TranscriptEntry] = []
    capability = getattr(client, "capability", "")

    def result(success, rounds, reason=None, detail=""):
        return TrialResult(task.id, client.model_id, context, repeat, success, rounds,
                           reason, detail, capability, tuple(transcript))

    for attempt in range(max_debug_rounds + 1):
        try:
            response = client.generate(Conversation(tuple(messages), meta))
        except Exception as exc:    # any adapter failure is the client's, not the model's
            return result(False, attempt, CLIENT_ERROR, str(exc))
        code = extract_code(response)
        if no_code == NO_CODE_FAIL and not has_code_block(response):
            report = ExecutionReport(exit_code=-1, stderr=NO_CODE_MESSAGE)
        else:
            try:
                report = executor.run(code, task)
            except Exception as exc:
                report = ExecutionReport(exit_code=-1, stderr=f"executor error: {exc!r}")
        transcript.append(TranscriptEntry(messages[-1].content, response, report))
        messages.append(Message("assistant", response))
        if report.ok:
            if not check_library_utilization(code, task.target_library, task.required_symbols):
                return result(False, attempt, WRONG_LIBRARY,
                              f"code does not invoke {task.target_library}")
            passed, why = task.success_check.evaluate(report)
            if passed:
                return result(True, attempt)
            return result(False, attempt, EXECUTION_FAILURE, why)
        if attempt == max_debug_rounds:
            return result(False, attempt, ROUNDS_EXHAUSTED, report.error_text()[:500])
        messages.append(Message("user", report.error_text()))
    raise AssertionError("unreachable")


# -- suite -------------------------------------------------------------------


def load_results(path: Union[str, Path]) -> list[TrialResult]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(TrialResult.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            # a torn final line from an interrupted run is dropped
            log.warning("%s:%d: skipping unreadable record (%s)", path, n, exc)
    return out


def _dump(result: TrialResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True, ensure_ascii=False)


def write_results(path: Union[str, Path], results: Iterable[TrialResult]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("".join(_dump(r) + "\n" for r in results), encoding="utf-8")
    os.replace(tmp, path)


def run_suite(tasks: Sequence[EvalTask], contexts: Mapping[str, str],
              clients: Sequence[ModelClient], repeats: int = DEFAULT_REPEATS, *,
              executor: Union[CodeExecutor, Callable[[], CodeExecutor]],
              results_path: Optional[Union[str, Path]] = None, workers: int = 1,
              max_debug_rounds: int = MAX_DEBUG_ROUNDS,
              no_code: str = NO_CODE_EXECUTE) -> list[TrialResult]:
    """Run every task x context x client cell ``repeats`` times.

    Results already in ``results_path`` are kept and their trials are not
    rerun, so an interrupted suite resumes where it stopped.  New records
    are appended as they finish; at the end the file is rewritten in the
    canonical (task, context, client, repeat) order.
    """
    order = [(t, label, c, r) for t in tasks for label in contexts
             for c in clients for r in range(repeats)]
    rank = {(t.id, label, c.model_id, r): i for i, (t, label, c, r) in enumerate(order)}
    done = {}
    foreign = {}    # records from other grids stay on disk untouched
    if results_path is not None:
        for res in load_results(results_path):
            (done if res.key in rank else foreign)[res.key] = res
    pending = [cell for cell in order if (cell[0].id, cell[1], cell[2].model_id, cell[3]) not in done]
    # a class or factory gives each trial its own executor
    make_executor = executor if isinstance(executor, type) or not hasattr(executor, "run") else None

    def one(cell) -> TrialResult:
        task, label, client, rep = cell
        ex = make_executor() if make_executor else executor
        try:
            return run_trial(task, contexts[label], client, ex, context=label, repeat=rep,
                             max_debug_rounds=max_debug_rounds, no_code=no_code)
        except Exception as exc:
            log.exception("trial %s/%s/%s/%d crashed", task.id, label, client.model_id, rep)
            return TrialResult(task.id, client.model_id, label, rep, False, 0,
                               CLIENT_ERROR, f"harness error: {exc!r}")

    sink = open(results_path, "a", encoding="utf-8") if results_path is not None else None
    try:
        def record(res: TrialResult):
            done[res.key] = res
            if sink is not None:
                sink.write(_dump(res) + "\n")
                sink.flush()

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                futures = [pool.submit(one, cell) for cell in pending]
                for fut in as_completed(futures):
                    record(fut.result())
        else:
            for cell in pending:
                record(one(cell))
    finally:
        if sink is not None:
            sink.close()

    results = sorted(done.values(), key=lambda r: rank[r.key])
    if results_path is not None:
        write_results(results_path, [*results, *foreign.values()])
    errors = sum(1 for r in results if not r.counted)
    if errors:
        log.warning("%d trial(s) ended with ClientError and are excluded from rates", errors)
    return results
