"""Translation of prompt components and model outputs via pluggable providers.

Identity requests short-circuit before any provider or cache is touched. The
mock provider wraps text in a reversible direction tag so tests can assert
exactly which components were translated; the replay provider serves only
from a seeded store and fails loudly on a miss.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import requests

from .errors import ReplayMissError, TransportError
from .store import KeyValueLog, content_key


@dataclass(frozen=True)
class TranslationRequest:
    text: str
    source_lang: str
    target_lang: str


def translation_key(provider_name: str, source: str, target: str, text: str) -> str:
    return content_key("translation", provider_name, source, target, text)


class TranslationCache:
    """Append-only cache keyed by (provider, source, target, text hash)."""

    def __init__(self, store: KeyValueLog):
        self.store = store

    def get(self, provider_name: str, req: TranslationRequest) -> str | None:
        value = self.store.get(translation_key(provider_name, req.source_lang, req.target_lang, req.text))
        return None if value is None else value["text"]

    def put_once(self, provider_name: str, req: TranslationRequest, text: str) -> str:
        key = translation_key(provider_name, req.source_lang, req.target_lang, req.text)
        return self.store.put_once(key, {"text": text})["text"]


class MockTranslator:
    """Deterministic offline translator using a reversible direction tag.

    translate(t, a->b) produces "⟦a→b⟧t"; translating that back (b->a)
    strips the tag, so a round trip is the identity.
    """

    name = "mock"
    kind = "mock"

    def translate_text(self, text: str, source: str, target: str) -> str:
        inverse_tag = f"⟦{target}→{source}⟧"
        if text.startswith(inverse_tag):
            return text[len(inverse_tag) :]
        return f"⟦{source}→{target}⟧{text}"


class ReplayTranslator:
    """Serves translations from a seeded store; never contacts a network."""

    kind = "replay"

    def __init__(self, store: KeyValueLog, name: str = "replay"):
        self.name = name
        self.store = store

    def translate_text(self, text: str, source: str, target: str) -> str:
        value = self.store.get(translation_key(self.name, source, target, text))
        if value is None:
            raise ReplayMissError(
                f"no replayed translation for {source}->{target} text of length {len(text)}"
            )
        return value["text"]


class HttpTranslator:
    """Generic JSON-over-HTTP adapter: POST {text, source, target}.

    The credential is read from the environment variable named by
    ``key_env`` and sent as a bearer token when present. Responses may carry
    the translation under "translation", "translatedText", or "text".
    """

    kind = "remote-http"

    def __init__(
        self,
        name: str,
        base_url: str,
        key_env: str | None = None,
        timeout: float = 30.0,
        max_attempts: int = 4,
        backoff_base: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.name = name
        self.base_url = base_url
        self.key_env = key_env or f"SELPROMPT_{name.upper()}_KEY"
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def translate_text(self, text: str, source: str, target: str) -> str:
        payload = {"text": text, "source": source, "target": target}
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_base * 2 ** (attempt - 1))
            try:
                response = self.session.post(
                    self.base_url, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code == 429:
                delay = response.headers.get("Retry-After")
                if delay:
                    try:
                        time.sleep(min(float(delay), 30.0))
                    except ValueError:
                        pass
                last_error = TransportError(f"rate limited by {self.name}")
                continue
            if response.status_code >= 500:
                last_error = TransportError(f"{self.name} returned {response.status_code}")
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"{self.name} rejected the request: {response.status_code} {response.text[:200]}"
                )
            body = response.json()
            for field in ("translation", "translatedText", "text"):
                if field in body:
                    return str(body[field])
            raise TransportError(f"{self.name} response has no translation field")
        raise TransportError(
            f"{self.name} failed after {self.max_attempts} attempts: {last_error}"
        )


def translate(
    req: TranslationRequest,
    provider,
    cache: TranslationCache | None = None,
) -> str:
    """Translate with identity short-circuit and write-once caching.

    Identity requests return the input verbatim without touching the provider
    or the cache. On a cache hit the provider is bypassed; on a miss the
    first stored value wins, so every caller observes the same translation.
    """
    if req.source_lang == req.target_lang:
        return req.text
    if cache is not None:
        hit = cache.get(provider.name, req)
        if hit is not None:
            return hit
    translated = provider.translate_text(req.text, req.source_lang, req.target_lang)
    if cache is not None:
        return cache.put_once(provider.name, req, translated)
    return translated


def back_translate(
    output: str,
    from_lang: str,
    to_lang: str,
    provider,
    cache: TranslationCache | None = None,
) -> str:
    """Bring model output into the gold language before scoring."""
    return translate(TranslationRequest(output, from_lang, to_lang), provider, cache)
