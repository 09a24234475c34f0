"""Chat-completion clients: a remote HTTP provider and a scripted stub.

The rest of the engine only sees `complete(CompletionRequest) -> str`, so
stub and remote are interchangeable in every test.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import httpx

from .errors import BudgetExceeded, ProviderUnavailable, ResponseEmpty
from .prompts import estimate_tokens

DEFAULT_TEMPERATURE_SQL = 0.0
DEFAULT_TEMPERATURE_RAG = 0.2
API_KEY_ENV = "CONTRACTQA_LLM_API_KEY"


@dataclass
class CompletionRequest:
    messages: list[tuple[str, str]]
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0][0] != "system":
            raise ValueError("first message must have role system")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")

    def flat_text(self) -> str:
        return "\n".join(text for _, text in self.messages)


class ChatClient(Protocol):
    def complete(self, req: CompletionRequest) -> str: ...


@dataclass
class StubRule:
    match: str
    response: str
    regex: bool = False

    def applies(self, prompt_text: str) -> bool:
        if self.regex:
            return re.search(self.match, prompt_text, re.IGNORECASE) is not None
        return self.match.lower() in prompt_text.lower()


class ScriptedStub:
    """Deterministic canned provider: first matching rule wins; every call is
    logged for assertions. Rules can be consumed in order (one-shot) so a
    retry can be scripted to a different response."""

    def __init__(self, rules: Optional[list[StubRule]] = None,
                 default_response: str = "I do not know.",
                 one_shot: bool = False):
        self.rules = list(rules or [])
        self.default_response = default_response
        self.one_shot = one_shot
        self.calls: list[CompletionRequest] = []

    def complete(self, req: CompletionRequest) -> str:
        self.calls.append(req)
        text = req.flat_text()
        for i, rule in enumerate(self.rules):
            if rule.applies(text):
                if self.one_shot:
                    self.rules.pop(i)
                return rule.response
        return self.default_response


def load_stub_script(path: str | Path) -> ScriptedStub:
    """Stub script file: JSON {"rules": [{"match", "response", "regex"?}],
    "default": str, "one_shot"?: bool}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    rules = [StubRule(r["match"], r["response"], r.get("regex", False))
             for r in data.get("rules", [])]
    return ScriptedStub(rules, data.get("default", "I do not know."),
                        data.get("one_shot", False))


class RemoteChatClient:
    """OpenAI-style chat-completion endpoint; API key via environment, never
    echoed in logs or errors."""

    def __init__(self, base_url: str, model: str,
                 api_key_env: str = API_KEY_ENV,
                 max_in_flight: int = 4,
                 retry_attempts: int = 3,
                 retry_base_s: float = 0.25,
                 request_token_limit: int = 120_000,
                 client: Optional[httpx.Client] = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self._api_key = os.environ.get(api_key_env, "")
        self.retry_attempts = retry_attempts
        self.retry_base_s = retry_base_s
        self.request_token_limit = request_token_limit
        self._client = client or httpx.Client(timeout=60.0)
        self._slots = threading.Semaphore(max_in_flight)

    def complete(self, req: CompletionRequest) -> str:
        if estimate_tokens(req.flat_text()) > self.request_token_limit:
            raise BudgetExceeded("request estimated over the provider limit")
        payload = {
            "model": self.model,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
            "messages": [{"role": role, "content": text} for role, text in req.messages],
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        last_exc = None
        for attempt in range(self.retry_attempts):
            try:
                with self._slots:
                    resp = self._client.post(f"{self.base_url}/chat/completions",
                                             json=payload, headers=headers)
                resp.raise_for_status()
                text = resp.json()["choices"][0]["message"]["content"]
                if not text or not text.strip():
                    raise ResponseEmpty("provider returned an empty completion")
                return text
            except ResponseEmpty:
                raise
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_exc = exc
                time.sleep(self.retry_base_s * (2 ** attempt))
        raise ProviderUnavailable(
            f"chat endpoint failed after {self.retry_attempts} attempts"
        ) from last_exc
