"""Model clients: scripted (deterministic) and HTTP chat-completions."""

from __future__ import annotations

import json
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Protocol, Sequence, Union


class ClientError(RuntimeError):
    """Transport or authentication failure; not the model's fault."""


@dataclass(frozen=True)
class Message:
    role: str       # "system", "user" or "assistant"
    content: str


@dataclass(frozen=True)
class Conversation:
    messages: tuple[Message, ...]
    # trial identity: task, context, repeat; adapters may ignore it
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def attempt(self) -> int:
        return sum(1 for m in self.messages if m.role == "assistant")


class ModelClient(Protocol):
    model_id: str
    capability: str

    def generate(self, conversation: Conversation) -> str: ...


Script = Union[Mapping[str, Sequence[str]], Callable[[Conversation], str]]


class ScriptedClient:
    """Replays canned responses; the same script always gives the same run.

    ``script`` maps a key to the responses for attempts 0, 1, 2, ...; the
    last response repeats if the trial asks for more.  Keys are tried from
    most to least specific::

        "<task>/<context>/<repeat>", "<task>/<context>", "<context>", "<task>", "*"

    A callable script receives the conversation and returns the response.
    """

    def __init__(self, model_id: str, script: Script, capability: str = "scripted"):
        self.model_id = model_id
        self.capability = capability
        self.script = script

    def _responses(self, meta: Mapping[str, object]) -> Sequence[str]:
        task, context, repeat = meta.get("task"), meta.get("context"), meta.get("repeat")
        for key in (f"{task}/{context}/{repeat}", f"{task}/{context}", f"{context}",
                    f"{task}", "*"):
            if key in self.script:
                return self.script[key]
        raise ClientError(f"{self.model_id}: no scripted response for {task}/{context}/{repeat}")

    def generate(self, conversation: Conversation) -> str:
        if callable(self.script):
            return self.script(conversation)
        responses = self._responses(conversation.meta)
        if not responses:
            raise ClientError(f"{self.model_id}: empty script")
        return responses[min(conversation.attempt, len(responses) - 1)]


class ChatCompletionsClient:
    """Thin adapter for an OpenAI-style ``/chat/completions`` endpoint.

    The API key is read from the environment variable named by
    ``api_key_env``.  Calls from several threads are spaced by at least
    ``min_interval`` seconds.
    """

    def __init__(self, model_id: str, endpoint: str, model: Optional[str] = None,
                 api_key_env: str = "OPENAI_API_KEY", capability: str = "",
                 temperature: Optional[float] = None, timeout: float = 120.0,
                 min_interval: float = 0.0, system_prompt: Optional[str] = None):
        self.model_id = model_id
        self.endpoint = endpoint
        self.model = model or model_id
        self.api_key_env = api_key_env
        self.capability = capability
        self.temperature = temperature
        self.timeout = timeout
        self.min_interval = min_interval
        self.system_prompt = system_prompt
        self._lock = threading.Lock()
        self._last = 0.0

    def _payload(self, conversation: Conversation) -> dict:
        messages = [{"role": m.role, "content": m.content} for m in conversation.messages]
        if self.system_prompt:
            messages.insert(0, {"role": "system", "content": self.system_prompt})
        payload = {"model": self.model, "messages": messages}
        if self.temperature is not None:
            payload["temperature"] = self.temperature
        return payload

    def _throttle(self):
        with self._lock:
            wait = self._last + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last = time.monotonic()

    def generate(self, conversation: Conversation) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise ClientError(f"environment variable {self.api_key_env} is not set")
        self._throttle()
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(self._payload(conversation)).encode("utf-8"),
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {key}"},
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as exc:
            raise ClientError(f"{self.model_id}: {exc}") from exc
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ClientError(f"{self.model_id}: unexpected response shape") from exc
