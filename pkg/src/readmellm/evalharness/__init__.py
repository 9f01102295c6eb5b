"""Context-ablation evaluation: trials, suites and success-rate reports."""

from readmellm.evalharness.clients import (
    ChatCompletionsClient,
    ClientError,
    Conversation,
    Message,
    ModelClient,
    ScriptedClient,
)
from readmellm.evalharness.executors import (
    CodeExecutor,
    ExecutionReport,
    FakeExecutor,
    SubprocessExecutor,
)
from readmellm.evalharness.harness import (
    CLIENT_ERROR,
    EXECUTION_FAILURE,
    MAX_DEBUG_ROUNDS,
    ROUNDS_EXHAUSTED,
    WRONG_LIBRARY,
    TrialResult,
    extract_code,
    load_results,
    run_suite,
    run_trial,
)
from readmellm.evalharness.report import EmptyResultsError, SuccessTable, report, success_rate
from readmellm.evalharness.tasks import EvalTask, SuccessCheck
from readmellm.evalharness.utilization import check_library_utilization

__all__ = [
    "CLIENT_ERROR", "EXECUTION_FAILURE", "MAX_DEBUG_ROUNDS", "ROUNDS_EXHAUSTED",
    "WRONG_LIBRARY", "ChatCompletionsClient", "ClientError", "CodeExecutor",
    "Conversation", "EmptyResultsError", "EvalTask", "ExecutionReport", "FakeExecutor",
    "Message", "ModelClient", "ScriptedClient", "SubprocessExecutor", "SuccessCheck",
    "SuccessTable", "TrialResult", "check_library_utilization", "extract_code",
    "load_results", "report", "run_suite", "run_trial", "success_rate",
]
