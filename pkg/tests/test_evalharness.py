import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings, strategies as st

from readmellm.evalharness import (
    CLIENT_ERROR,
    EXECUTION_FAILURE,
    ROUNDS_EXHAUSTED,
    WRONG_LIBRARY,
    ChatCompletionsClient,
    ClientError,
    Conversation,
    EvalTask,
    ExecutionReport,
    FakeExecutor,
    Message,
    ScriptedClient,
    SubprocessExecutor,
    SuccessCheck,
    TrialResult,
    extract_code,
    load_results,
    run_suite,
    run_trial,
)
from readmellm.evalharness.harness import NO_CODE_FAIL

GOOD = "```python\nimport supervision as sv\nsv.crop_image(img, box)\n# fake: stdout saved\n```"
BROKEN = "```python\nimport supervision as sv\nsv.nope()\n# fake: error AttributeError: nope\n```"
CV2 = "```python\nimport cv2\ncv2.imwrite('a.png', img)\n# fake: stdout saved\n```"
QUIET = "```python\nimport supervision as sv\nsv.crop_image(img, box)\n```"


@pytest.fixture
def task():
    return EvalTask("crop", "Crop the image.", "supervision",
                    SuccessCheck(stdout_contains=("saved",)))


def scripted(*responses, model_id="m"):
    return ScriptedClient(model_id, {"*": list(responses)})


class TestExtractCode:
    @pytest.mark.parametrize("response, code", [
        ("```python\nx = 1\n```", "x = 1"),
        ("Sure!\n```\na\nb\n```\nthen\n```py\nsecond\n```", "a\nb"),
        ("~~~python\ny = 2\n~~~", "y = 2"),
        ("print('no fences')", "print('no fences')"),
        ("  ```python\n  indented = True\n  ```", "  indented = True"),
    ])
    def test_first_block_or_whole(self, response, code):
        assert extract_code(response) == code


class TestRunTrial:
    def test_success_first_attempt(self, task):
        ex = FakeExecutor()
        r = run_trial(task, "ctx", scripted(GOOD), ex)
        assert r.success and r.debug_rounds_used == 0 and r.failure_reason is None
        assert ex.calls == 1 and len(r.transcript) == 1

    @pytest.mark.parametrize("fails_before_good, success, rounds, reason", [
        (1, True, 1, None),
        (2, True, 2, None),
        (3, True, 3, None),
        (4, False, 3, ROUNDS_EXHAUSTED),
        (9, False, 3, ROUNDS_EXHAUSTED),
    ])
    def test_round_cap(self, task, fails_before_good, success, rounds, reason):
        ex = FakeExecutor()
        r = run_trial(task, "", scripted(*[BROKEN] * fails_before_good, GOOD), ex)
        assert (r.success, r.debug_rounds_used, r.failure_reason) == (success, rounds, reason)
        assert ex.calls == min(fails_before_good + 1, 4)
        assert len(r.transcript) == 1 + r.debug_rounds_used

    def test_wrong_library(self, task):
        r = run_trial(task, "", scripted(CV2), FakeExecutor())
        assert r.failure_reason == WRONG_LIBRARY and not r.success

    def test_success_check_failure(self, task):
        r = run_trial(task, "", scripted(QUIET), FakeExecutor())
        assert r.failure_reason == EXECUTION_FAILURE
        assert "saved" in r.detail

    def test_error_text_becomes_next_user_turn(self, task):
        seen = []

        def script(conv: Conversation) -> str:
            seen.append(conv)
            return BROKEN if conv.attempt == 0 else GOOD

        run_trial(task, "CONTEXT", ScriptedClient("m", script), FakeExecutor())
        first, second = seen
        assert first.messages[0].content == "CONTEXT\n\nCrop the image."
        assert [m.role for m in second.messages] == ["user", "assistant", "user"]
        assert second.messages[-1].content == "AttributeError: nope"

    def test_empty_context_sends_prompt_only(self, task):
        seen = []
        run_trial(task, "", ScriptedClient("m", lambda c: seen.append(c) or GOOD), FakeExecutor())
        assert seen[0].messages[0].content == "Crop the image."

    def test_client_error_recorded(self, task):
        def boom(conv):
            raise ClientError("401 unauthorized")

        r = run_trial(task, "", ScriptedClient("m", boom), FakeExecutor())
        assert r.failure_reason == CLIENT_ERROR and not r.counted
        assert "401" in r.detail

    def test_client_error_mid_trial(self, task):
        def flaky(conv):
            if conv.attempt == 1:
                raise ConnectionError("reset")
            return BROKEN

        r = run_trial(task, "", ScriptedClient("m", flaky), FakeExecutor())
        assert r.failure_reason == CLIENT_ERROR and len(r.transcript) == 1

    def test_timeout_counts_as_failed_round(self, task):
        timeout = "```python\nimport supervision as sv\nsv.x()\n# fake: timeout\n```"
        r = run_trial(task, "", scripted(timeout, GOOD), FakeExecutor())
        assert r.success and r.debug_rounds_used == 1
        assert r.transcript[0].execution.timed_out

    def test_executor_exception_is_failed_round(self, task):
        class Exploding:
            def run(self, code, task):
                raise OSError("disk full")

        r = run_trial(task, "", scripted(GOOD), Exploding())
        assert r.failure_reason == ROUNDS_EXHAUSTED
        assert "disk full" in r.detail

    def test_keyboard_interrupt_propagates(self, task):
        def stop(conv):
            raise KeyboardInterrupt

        with pytest.raises(KeyboardInterrupt):
            run_trial(task, "", ScriptedClient("m", stop), FakeExecutor())

    def test_prose_policy(self, task):
        prose = "I cannot do that without more information."
        ex = FakeExecutor()
        r = run_trial(task, "", scripted(prose, GOOD), ex, no_code=NO_CODE_FAIL)
        assert r.success and r.debug_rounds_used == 1 and ex.calls == 1
        # default policy runs the prose; the fake executor treats it as clean code
        r = run_trial(task, "", scripted(prose, GOOD), FakeExecutor())
        assert r.failure_reason == WRONG_LIBRARY

    def test_unknown_prose_policy(self, task):
        with pytest.raises(ValueError):
            run_trial(task, "", scripted(GOOD), FakeExecutor(), no_code="skip")

    def test_roundtrip_serialization(self, task):
        r = run_trial(task, "ctx", scripted(BROKEN, GOOD), FakeExecutor(), context="c", repeat=2)
        assert TrialResult.from_dict(json.loads(json.dumps(r.to_dict()))) == r

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sampled_from([GOOD, BROKEN, CV2, QUIET]), min_size=1, max_size=8))
    def test_invariants(self, responses):
        task = EvalTask("t", "p", "supervision", SuccessCheck(stdout_contains=("saved",)))
        ex = FakeExecutor()
        r = run_trial(task, "", scripted(*responses), ex)
        assert 0 <= r.debug_rounds_used <= 3 and ex.calls <= 4
        assert len(r.transcript) == 1 + r.debug_rounds_used == ex.calls
        if r.success:
            assert r.failure_reason is None
        else:
            assert r.failure_reason in (EXECUTION_FAILURE, WRONG_LIBRARY, ROUNDS_EXHAUSTED)


class TestScriptedClient:
    def conv(self, attempt=0, **meta):
        msgs = [Message("user", "p")]
        for _ in range(attempt):
            msgs += [Message("assistant", "a"), Message("user", "err")]
        return Conversation(tuple(msgs), meta)

    def test_key_precedence(self):
        client = ScriptedClient("m", {
            "t/c/1": ["exact"], "t/c": ["cell"], "c": ["context"], "t": ["task"], "*": ["any"],
        })
        assert client.generate(self.conv(task="t", context="c", repeat=1)) == "exact"
        assert client.generate(self.conv(task="t", context="c", repeat=0)) == "cell"
        assert client.generate(self.conv(task="u", context="c", repeat=0)) == "context"
        assert client.generate(self.conv(task="t", context="d", repeat=0)) == "task"
        assert client.generate(self.conv(task="u", context="d", repeat=0)) == "any"

    def test_last_response_repeats(self):
        client = ScriptedClient("m", {"*": ["a", "b"]})
        assert [client.generate(self.conv(i)) for i in range(4)] == ["a", "b", "b", "b"]

    def test_missing_key(self):
        with pytest.raises(ClientError):
            ScriptedClient("m", {"x": ["a"]}).generate(self.conv(task="t", context="c"))


class _Handler(BaseHTTPRequestHandler):
    requests: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).requests.append((self.headers["Authorization"], body))
        if body["model"] == "bad-shape":
            payload = {"unexpected": True}
        else:
            payload = {"choices": [{"message": {"role": "assistant", "content": "hello"}}]}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_server():
    _Handler.requests = []
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestChatCompletionsClient:
    conv = Conversation((Message("user", "hi"),))

    def test_roundtrip(self, chat_server, monkeypatch):
        monkeypatch.setenv("TEST_KEY", "sekret")
        client = ChatCompletionsClient("gpt-x", chat_server, api_key_env="TEST_KEY",
                                       temperature=0.0, system_prompt="be brief")
        assert client.generate(self.conv) == "hello"
        auth, body = _Handler.requests[0]
        assert auth == "Bearer sekret"
        assert body["messages"][0] == {"role": "system", "content": "be brief"}
        assert body["temperature"] == 0.0

    def test_missing_key(self, monkeypatch):
        monkeypatch.delenv("NO_SUCH_KEY", raising=False)
        with pytest.raises(ClientError, match="NO_SUCH_KEY"):
            ChatCompletionsClient("m", "http://127.0.0.1:9", api_key_env="NO_SUCH_KEY").generate(
                self.conv)

    def test_bad_shape(self, chat_server, monkeypatch):
        monkeypatch.setenv("TEST_KEY", "k")
        client = ChatCompletionsClient("m", chat_server, model="bad-shape", api_key_env="TEST_KEY")
        with pytest.raises(ClientError, match="shape"):
            client.generate(self.conv)

    def test_unreachable(self, monkeypatch):
        monkeypatch.setenv("TEST_KEY", "k")
        client = ChatCompletionsClient("m", "http://127.0.0.1:9/x", api_key_env="TEST_KEY",
                                       timeout=2)
        with pytest.raises(ClientError):
            client.generate(self.conv)


class TestFakeExecutor:
    def test_markers(self, task):
        code = "# fake: stdout hi\n# fake: files b.png a.png\n# fake: check-fail"
        t = EvalTask("t", "p", "x", SuccessCheck(script="pass"))
        r = FakeExecutor().run(code, t)
        assert r.ok and r.stdout == "hi\n" and r.files == ("a.png", "b.png")
        assert r.check_exit == 1

    def test_error(self, task):
        r = FakeExecutor().run("# fake: error boom", task)
        assert not r.ok and r.error_text() == "boom"


@pytest.mark.skipif(sys.platform == "win32", reason="posix process limits")
class TestSubprocessExecutor:
    def test_success_and_files(self, tmp_path):
        t = EvalTask("t", "p", "x", SuccessCheck(expected_files=("out/*.txt",)),
                     workspace={"in.txt": "data"})
        code = ("import pathlib\npathlib.Path('out').mkdir()\n"
                "pathlib.Path('out/r.txt').write_text(open('in.txt').read())\nprint('done')\n")
        r = SubprocessExecutor(timeout=20).run(code, t)
        assert r.ok and r.stdout == "done\n" and r.files == ("out/r.txt",)
        assert t.success_check.evaluate(r) == (True, "")

    def test_error_text_is_traceback(self, task):
        r = SubprocessExecutor(timeout=20).run("raise ValueError('bad input')", task)
        assert r.exit_code == 1 and "ValueError: bad input" in r.error_text()

    def test_timeout(self, task):
        r = SubprocessExecutor(timeout=0.5).run("while True:\n    pass\n", task)
        assert r.timed_out and not r.ok and r.error_text() == "Execution timed out."

    @pytest.mark.parametrize("check, passed", [
        ("import pathlib\nassert pathlib.Path('o.txt').read_text() == 'ok'\n", True),
        ("raise SystemExit('mismatch')\n", False),
    ])
    def test_check_script(self, check, passed):
        t = EvalTask("t", "p", "x", SuccessCheck(script=check))
        r = SubprocessExecutor(timeout=20).run("open('o.txt', 'w').write('ok')", t)
        assert t.success_check.evaluate(r)[0] is passed


class TestRunSuite:
    def test_counting(self, task):
        out = run_suite([task], {"a": "", "b": "ctx"}, [scripted(GOOD)], 5,
                        executor=FakeExecutor())
        assert len(out) == 10
        assert [(r.context, r.repeat) for r in out] == [
            (c, i) for c in ("a", "b") for i in range(5)]

    def test_resume_runs_only_missing(self, task, tmp_path):
        path = tmp_path / "results.jsonl"
        calls = {"n": 0}

        def interrupting(conv):
            calls["n"] += 1
            if calls["n"] > 6:
                raise KeyboardInterrupt
            return GOOD

        with pytest.raises(KeyboardInterrupt):
            run_suite([task], {"a": "", "b": "ctx"}, [ScriptedClient("m", interrupting)], 5,
                      executor=FakeExecutor(), results_path=path)
        assert len(load_results(path)) == 6

        ex = FakeExecutor()
        out = run_suite([task], {"a": "", "b": "ctx"}, [scripted(GOOD)], 5,
                        executor=ex, results_path=path)
        assert ex.calls == 4 and len(out) == 10
        assert len(load_results(path)) == 10

    def test_torn_line_is_ignored(self, task, tmp_path):
        path = tmp_path / "r.jsonl"
        run_suite([task], {"a": ""}, [scripted(GOOD)], 2, executor=FakeExecutor(),
                  results_path=path)
        with path.open("a") as fh:
            fh.write('{"task_id": "crop", "mod')
        ex = FakeExecutor()
        run_suite([task], {"a": ""}, [scripted(GOOD)], 2, executor=ex, results_path=path)
        assert ex.calls == 0 and len(load_results(path)) == 2

    def test_single_failure_does_not_abort(self, task):
        def sometimes(conv):
            if conv.meta["repeat"] == 1:
                raise ClientError("rate limited")
            return GOOD

        out = run_suite([task], {"a": ""}, [ScriptedClient("m", sometimes)], 3,
                        executor=FakeExecutor())
        assert [r.failure_reason for r in out] == [None, CLIENT_ERROR, None]

    def test_deterministic_across_workers(self, task, tmp_path):
        clients = [ScriptedClient("m1", {"*": [BROKEN, GOOD]}), scripted(CV2, model_id="m2")]
        contexts = {"none": "", "doc": "ctx"}
        serial, parallel = tmp_path / "s.jsonl", tmp_path / "p.jsonl"
        run_suite([task], contexts, clients, 5, executor=FakeExecutor, results_path=serial)
        run_suite([task], contexts, clients, 5, executor=FakeExecutor, results_path=parallel,
                  workers=4)
        assert serial.read_bytes() == parallel.read_bytes()

    def test_results_outside_grid_are_kept_on_disk_but_not_returned(self, task, tmp_path):
        path = tmp_path / "r.jsonl"
        run_suite([task], {"a": "", "b": ""}, [scripted(GOOD)], 1, executor=FakeExecutor(),
                  results_path=path)
        out = run_suite([task], {"a": ""}, [scripted(GOOD)], 1, executor=FakeExecutor(),
                        results_path=path)
        assert [r.context for r in out] == ["a"]
        assert [r.context for r in load_results(path)] == ["a", "b"]


class TestExecutionReport:
    def test_dict_roundtrip(self):
        r = ExecutionReport(1, "o", "e", False, ("a",), 0, "c")
        assert ExecutionReport.from_dict(r.to_dict()) == r
