"""Chat-completion backends: an offline fixture table and an OpenAI-compatible HTTP client."""
from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Mapping, Protocol

import httpx

from .._http import post_json
from ..errors import ProviderError

FIXTURE_SCHEMA = 1


class LlmProvider(Protocol):
    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str: ...


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


def fixture_key(prompt: str, seed: int | str) -> str:
    return f"{prompt_hash(prompt)}:{seed}"


class FixtureLLM:
    """Canned replies keyed by ``<sha256(prompt)[:16]>:<seed>``.

    Lookup order: exact seed, then the ``:*`` wildcard for that prompt, then
    the optional table-wide ``default``. Temperature is ignored, so replies
    are a pure function of (prompt, seed). Every call is recorded.
    """

    def __init__(self, replies: Mapping[str, str] | None = None, default: str | None = None):
        self.replies = dict(replies or {})
        self.default = default
        self.calls: list[tuple[str, int]] = []
        self._lock = threading.Lock()

    def add(self, prompt: str, reply: str, seed: int | None = None) -> "FixtureLLM":
        self.replies[fixture_key(prompt, "*" if seed is None else seed)] = reply
        return self

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str:
        with self._lock:
            self.calls.append((prompt, seed))
        for key in (fixture_key(prompt, seed), fixture_key(prompt, "*")):
            if key in self.replies:
                return self.replies[key]
        if self.default is not None:
            return self.default
        raise ProviderError("no fixture reply for prompt", key=fixture_key(prompt, seed))

    @property
    def call_count(self) -> int:
        return len(self.calls)

    def to_dict(self) -> dict:
        d = {"schema_version": FIXTURE_SCHEMA, "replies": dict(sorted(self.replies.items()))}
        if self.default is not None:
            d["default"] = self.default
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n", "utf-8")

    @classmethod
    def from_file(cls, path) -> "FixtureLLM":
        d = json.loads(Path(path).read_text("utf-8"))
        if d.get("schema_version") != FIXTURE_SCHEMA:
            raise ProviderError(f"{path}: unsupported fixture schema_version {d.get('schema_version')}")
        return cls(d.get("replies", {}), d.get("default"))


class ChatCompletionsLLM:
    """Client for ``POST {base_url}/v1/chat/completions``."""

    def __init__(self, base_url: str, model: str, api_key: str | None = None, *,
                 timeout: float = 60.0, max_retries: int = 3, backoff: float = 1.0,
                 client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.client = client

    @classmethod
    def from_env(cls, base_url: str | None = None, model: str | None = None, **kwargs) -> "ChatCompletionsLLM":
        base_url = base_url or os.environ.get("RMD_LLM_BASE_URL")
        model = model or os.environ.get("RMD_LLM_MODEL")
        if not base_url or not model:
            raise ProviderError("remote LLM needs a base URL and model (RMD_LLM_BASE_URL, RMD_LLM_MODEL)")
        return cls(base_url, model, os.environ.get("RMD_LLM_API_KEY"), **kwargs)

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        body = post_json(f"{self.base_url}/v1/chat/completions", payload, self.api_key, client=self.client,
                         timeout=self.timeout, max_retries=self.max_retries, backoff=self.backoff)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProviderError("chat completion response lacks choices[0].message.content") from None
        if not isinstance(content, str):
            raise ProviderError("chat completion content is not a string")
        return content
