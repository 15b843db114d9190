"""Chat-completion providers with retries, rate limiting, and record/replay.

Completions are keyed by a content hash of (provider name, generation
parameters, prompt text), so recorded sweeps are resumable and replay in any
order. Deterministic providers (scripted, replay) report zero latency, which
keeps recorded stores byte-identical across runs.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable

import requests

from .errors import ReplayMissError, TransportError
from .prompting import CompiledPrompt
from .store import KeyValueLog, content_key


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    max_output_units: int = 1024

    def as_dict(self) -> dict:
        return {"temperature": self.temperature, "max_output_units": self.max_output_units}


@dataclass(frozen=True)
class CompletionRecord:
    key: str
    response_text: str
    latency: float
    attempt_count: int


def completion_key(provider_name: str, params: GenerationParams, prompt_text: str) -> str:
    return content_key(
        "completion",
        provider_name,
        json.dumps(params.as_dict(), sort_keys=True),
        prompt_text,
    )


class RateLimiter:
    """Bounds concurrent in-flight calls and enforces minimum spacing."""

    def __init__(self, max_in_flight: int = 4, min_interval: float = 0.0):
        self._semaphore = threading.Semaphore(max_in_flight)
        self._min_interval = min_interval
        self._lock = threading.Lock()
        self._last_start = 0.0

    def __enter__(self):
        self._semaphore.acquire()
        if self._min_interval > 0:
            with self._lock:
                wait = self._last_start + self._min_interval - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
                self._last_start = time.monotonic()
        return self

    def __exit__(self, *exc_info):
        self._semaphore.release()
        return False


class ScriptedModel:
    """Deterministic provider for tests: response is a function of the prompt."""

    kind = "scripted"

    def __init__(self, fn: Callable[[CompiledPrompt], str], name: str = "scripted",
                 params: GenerationParams = GenerationParams()):
        self.name = name
        self.fn = fn
        self.params = params

    def generate(self, prompt: CompiledPrompt) -> str:
        return self.fn(prompt)


def echo_context_script(prompt: CompiledPrompt) -> str:
    """Scripted behavior that returns the prompt's context block verbatim."""
    span = prompt.component_spans.get("context")
    if span is None:
        return ""
    return prompt.text[span[0] : span[1]]


class ReplayModel:
    """Serves completions from a previously recorded store only."""

    kind = "replay"

    def __init__(self, name: str, params: GenerationParams = GenerationParams()):
        self.name = name
        self.params = params


class HttpChatModel:
    """Chat-completion adapter: POST {model, messages, temperature, max_tokens}."""

    kind = "remote-http"

    def __init__(
        self,
        name: str,
        base_url: str,
        model: str | None = None,
        key_env: str | None = None,
        params: GenerationParams = GenerationParams(),
        timeout: float = 60.0,
        max_attempts: int = 4,
        backoff_base: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.name = name
        self.base_url = base_url
        self.model = model or name
        self.key_env = key_env or f"SELPROMPT_{name.upper()}_KEY"
        self.params = params
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.session = session or requests.Session()

    def request(self, prompt_text: str) -> tuple[str, int]:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": self.params.temperature,
            "max_tokens": self.params.max_output_units,
        }
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            if attempt > 1:
                time.sleep(self.backoff_base * 2 ** (attempt - 2))
            try:
                response = self.session.post(
                    self.base_url, json=body, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code == 429:
                delay = response.headers.get("Retry-After")
                if delay:
                    try:
                        time.sleep(min(float(delay), 60.0))
                    except ValueError:
                        pass
                last_error = TransportError("rate limited")
                continue
            if response.status_code >= 500:
                last_error = TransportError(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"{self.name} rejected the request: {response.status_code} {response.text[:200]}"
                )
            payload = response.json()
            text = _extract_completion_text(payload)
            if text is None:
                raise TransportError(f"{self.name} response has no completion text")
            return text, attempt
        raise TransportError(f"{self.name} failed after {self.max_attempts} attempts: {last_error}")


def _extract_completion_text(payload: dict) -> str | None:
    choices = payload.get("choices")
    if isinstance(choices, list) and choices:
        message = choices[0].get("message", {})
        if isinstance(message, dict) and "content" in message:
            return str(message["content"])
        if "text" in choices[0]:
            return str(choices[0]["text"])
    for field in ("text", "completion", "output"):
        if field in payload:
            return str(payload[field])
    return None


def complete(
    prompt: CompiledPrompt,
    provider,
    store: KeyValueLog | None = None,
    limiter: RateLimiter | None = None,
) -> CompletionRecord:
    """Run one completion, recording or replaying through the store.

    Remote responses are recorded under their key before returning; a key
    already present is served from the store without network contact. Replay
    mode requires the store and raises on a miss.
    """
    key = completion_key(provider.name, provider.params, prompt.text)
    if provider.kind == "replay":
        if store is None:
            raise ReplayMissError("replay provider needs a record store")
        value = store.get(key)
        if value is None:
            raise ReplayMissError(f"no recorded completion for key {key[:12]}…")
        return CompletionRecord(key, value["response_text"], 0.0, 1)

    if store is not None:
        value = store.get(key)
        if value is not None:
            return CompletionRecord(
                key, value["response_text"], value.get("latency", 0.0), value.get("attempt_count", 1)
            )

    if provider.kind == "scripted":
        text, latency, attempts = provider.generate(prompt), 0.0, 1
    else:
        started = time.monotonic()
        if limiter is not None:
            with limiter:
                text, attempts = provider.request(prompt.text)
        else:
            text, attempts = provider.request(prompt.text)
        latency = time.monotonic() - started

    if store is not None:
        value = store.put_once(
            key, {"response_text": text, "latency": latency, "attempt_count": attempts}
        )
        return CompletionRecord(key, value["response_text"], value.get("latency", 0.0),
                                value.get("attempt_count", 1))
    return CompletionRecord(key, text, latency, attempts)
