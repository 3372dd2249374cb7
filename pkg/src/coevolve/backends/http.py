"""Chat-completion generation backend over HTTP."""
from __future__ import annotations

import logging
import os
import threading
import time
from typing import Callable, Optional

import httpx

from .base import BackendProtocolError, BackendUnavailable, GenerationRequest

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class HttpGenerationBackend:
    """Posts ``{"model", "messages", "temperature", "top_p"}`` to ``<base_url>/chat/completions``.

    Transient failures (timeouts, connection errors, 429 and 5xx) are retried
    with exponential backoff; at most ``max_concurrency`` requests are in
    flight at once.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: Optional[str] = None,
        *,
        max_attempts: int = 5,
        backoff: float = 1.0,
        max_backoff: float = 30.0,
        timeout: float = 120.0,
        max_concurrency: int = 4,
        system_prompt: Optional[str] = None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("COEVOLVE_API_KEY")
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.max_backoff = max_backoff
        self.system_prompt = system_prompt
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_concurrency)
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def payload(self, request: GenerationRequest) -> dict:
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": request.prompt})
        return {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "top_p": request.top_p,
        }

    def generate(self, request: GenerationRequest) -> str:
        body = self.payload(request)
        url = f"{self.base_url}/chat/completions"
        delay = self.backoff
        last_error = "no attempt made"
        for attempt in range(1, self.max_attempts + 1):
            try:
                with self._slots:
                    response = self._client.post(url, json=body)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if response.status_code == 200:
                    return self._extract(response)
                if response.status_code not in RETRYABLE_STATUS:
                    raise BackendProtocolError(
                        f"HTTP {response.status_code} from {url}: {response.text[:200]}"
                    )
                last_error = f"HTTP {response.status_code}"
            if attempt < self.max_attempts:
                logger.warning("generation attempt %d failed (%s); retrying in %.1fs", attempt, last_error, delay)
                self._sleep(delay)
                delay = min(delay * 2, self.max_backoff)
        raise BackendUnavailable(f"{url} unavailable after {self.max_attempts} attempts: {last_error}")

    @staticmethod
    def _extract(response: httpx.Response) -> str:
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendProtocolError(f"malformed chat-completion response: {exc!r}") from None
        if not isinstance(content, str):
            raise BackendProtocolError("chat-completion content is not text")
        return content

    def close(self):
        self._client.close()
