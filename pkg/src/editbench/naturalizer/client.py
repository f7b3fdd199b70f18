"""Text-generation endpoints: an OpenAI-style HTTP client and a fixture-backed mock."""

from __future__ import annotations

import json
import logging
import os
import time
from pathlib import Path
from typing import Protocol

import httpx

from .requests import GenerationRequest

logger = logging.getLogger(__name__)


class GenerationError(RuntimeError):
    pass


class TextGenerator(Protocol):
    def complete(self, request: GenerationRequest) -> str: ...


class HttpEndpoint:
    """POSTs a chat-completions payload; retries transport errors and 429/5xx with exponential backoff."""

    def __init__(self, url: str, model: str, token: str | None = None, timeout: float = 120.0,
                 retries: int = 3, backoff: float = 1.0, client: httpx.Client | None = None):
        self.url = url
        self.model = model
        self.token = token
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, **kwargs) -> "HttpEndpoint":
        url = os.environ.get("EDITBENCH_ENDPOINT_URL")
        if not url:
            raise GenerationError("EDITBENCH_ENDPOINT_URL is not set")
        return cls(url, os.environ.get("EDITBENCH_MODEL", "deepseek-chat"),
                   os.environ.get("EDITBENCH_API_TOKEN"), **kwargs)

    def complete(self, request: GenerationRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(self.url, headers=headers, json=payload)
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise httpx.HTTPStatusError(f"status {resp.status_code}", request=resp.request, response=resp)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                if isinstance(exc, httpx.HTTPStatusError) and exc.response.status_code < 500 \
                        and exc.response.status_code != 429:
                    raise GenerationError(str(exc)) from exc
                last = exc
                if attempt < self.retries:
                    delay = self.backoff * (2 ** attempt)
                    logger.warning("generation request failed (%s), retrying in %.1fs", exc, delay)
                    time.sleep(delay)
        raise GenerationError(f"endpoint failed after {self.retries + 1} attempts: {last}")


class MockEndpoint:
    """Answers from a fixture mapping request digest -> canned response text.

    Fixture file: one JSON object ``{"<sha256 digest>": "<response>", ...}``.
    """

    def __init__(self, responses: dict[str, str]):
        self.responses = dict(responses)
        self.calls: list[GenerationRequest] = []

    @classmethod
    def load(cls, path: str | Path) -> "MockEndpoint":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.responses, indent=1, sort_keys=True, ensure_ascii=False),
                              encoding="utf-8")

    def add(self, request: GenerationRequest, response: str) -> None:
        self.responses[request.digest()] = response

    def complete(self, request: GenerationRequest) -> str:
        self.calls.append(request)
        try:
            return self.responses[request.digest()]
        except KeyError:
            raise GenerationError(f"no canned response for request {request.digest()[:12]}") from None
