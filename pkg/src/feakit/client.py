"""Chat-completions transport for VLM inference endpoints, plus a scripted test double.

Wire shape: POST JSON ``{model, messages: [{role, content: [{type: "text", text}
| {type: "image", data, media_type}]}], temperature, max_tokens}``; the reply
text is read from ``choices[0].message.content``. Images travel base64-inline
so the client works against local servers with no shared filesystem.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import requests

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {429}


class TransportError(RuntimeError):
    """Endpoint unreachable or still failing after all retries."""


class RequestError(RuntimeError):
    """The endpoint rejected the request (non-retryable 4xx)."""


class ProtocolError(RuntimeError):
    """The endpoint answered 200 with a body we cannot interpret."""


class ScriptExhaustedError(RuntimeError):
    """A scripted client received more calls than its script covers."""


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    data: bytes
    media_type: str


@dataclass(frozen=True)
class Message:
    role: str
    parts: tuple = ()

    def __post_init__(self):
        if self.role not in ("system", "user"):
            raise ValueError(f"unsupported role: {self.role!r}")
        object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple
    temperature: float
    max_tokens: int

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not any(m.role == "user" for m in self.messages):
            raise ValueError("request needs at least one user message")
        images = sum(isinstance(p, ImagePart) for m in self.messages for p in m.parts)
        if images > 1:
            raise ValueError("at most one image part per request")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def user_text(self) -> str:
        """Text of the last user message (the prompt, for logging)."""
        for message in reversed(self.messages):
            if message.role == "user":
                return "".join(p.text for p in message.parts if isinstance(p, TextPart))
        return ""


@dataclass(frozen=True)
class GenerationParams:
    """Sampling knobs shared by a batch of generation calls."""

    model: str = "local-vlm"
    temperature: float = 0.7
    max_tokens: int = 1024

    def request(self, prompt: str, image: ImagePart | None = None, temperature: float | None = None) -> ChatRequest:
        parts: list = [TextPart(prompt)]
        if image is not None:
            parts.append(image)
        return ChatRequest(
            model=self.model,
            messages=(Message("user", tuple(parts)),),
            temperature=self.temperature if temperature is None else temperature,
            max_tokens=self.max_tokens,
        )


@dataclass(frozen=True)
class ClientConfig:
    endpoint_url: str
    auth_token_env: str = "VLM_API_KEY"
    timeout_seconds: float = 60.0
    max_transport_retries: int = 3
    backoff_base_seconds: float = 0.5

    def __post_init__(self):
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")
        if self.max_transport_retries < 0:
            raise ValueError("max_transport_retries must be >= 0")


class VlmClient(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


def encode_request(request: ChatRequest) -> bytes:
    """Deterministic JSON body for a request; identical requests give identical bytes."""
    messages = []
    for message in request.messages:
        content = []
        for part in message.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                content.append(
                    {
                        "type": "image",
                        "data": base64.b64encode(part.data).decode("ascii"),
                        "media_type": part.media_type,
                    }
                )
        messages.append({"role": message.role, "content": content})
    body = {
        "model": request.model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }
    return json.dumps(body, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def _extract_reply(payload: dict) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"response body missing choices[0].message.content: {exc}") from exc
    if not isinstance(content, str):
        raise ProtocolError(f"assistant content is {type(content).__name__}, expected string")
    return content


def complete(request: ChatRequest, config: ClientConfig) -> str:
    """POST the request, returning the first choice's text.

    Timeouts, connection failures, 5xx and 429 are retried with exponential
    backoff up to max_transport_retries; other 4xx fail immediately.
    """
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(config.auth_token_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = encode_request(request)

    attempts = config.max_transport_retries + 1
    last_error: Exception | None = None
    for attempt in range(attempts):
        if attempt > 0 and config.backoff_base_seconds > 0:
            time.sleep(config.backoff_base_seconds * 2 ** (attempt - 1))
        try:
            response = requests.post(
                config.endpoint_url, data=body, headers=headers, timeout=config.timeout_seconds
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_error = exc
            logger.debug("transport failure on attempt %d/%d: %s", attempt + 1, attempts, exc)
            continue
        if response.status_code >= 500 or response.status_code in RETRYABLE_STATUS:
            last_error = TransportError(f"HTTP {response.status_code} from {config.endpoint_url}")
            logger.debug("retryable status %d on attempt %d/%d", response.status_code, attempt + 1, attempts)
            continue
        if response.status_code >= 400:
            raise RequestError(f"HTTP {response.status_code} from {config.endpoint_url}: {response.text[:200]}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProtocolError(f"response is not JSON: {exc}") from exc
        return _extract_reply(payload)
    raise TransportError(f"gave up after {attempts} attempts: {last_error}")


@dataclass(frozen=True)
class HttpVlmClient:
    config: ClientConfig

    def complete(self, request: ChatRequest) -> str:
        return complete(request, self.config)


@dataclass
class CallRecord:
    request: ChatRequest
    prompt: str
    temperature: float


class ScriptedVlmClient:
    """Test double whose k-th call yields the k-th script entry.

    Entries are reply strings or exceptions to raise. The full call log
    (prompts, temperatures) is recorded; exceeding the script raises unless
    loop=True wraps around.
    """

    def __init__(self, script: Sequence, loop: bool = False):
        if not script:
            raise ValueError("script must be non-empty")
        self.script = list(script)
        self.loop = loop
        self.calls: list[CallRecord] = []
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            index = len(self.calls)
            self.calls.append(CallRecord(request=request, prompt=request.user_text(), temperature=request.temperature))
        if index >= len(self.script):
            if not self.loop:
                raise ScriptExhaustedError(f"call {index + 1} exceeds script of length {len(self.script)}")
            index %= len(self.script)
        entry = self.script[index]
        if isinstance(entry, BaseException):
            raise entry
        return entry


def scripted_mock(script: Sequence, loop: bool = False) -> ScriptedVlmClient:
    return ScriptedVlmClient(script, loop=loop)


def load_script(path: str | Path) -> ScriptedVlmClient:
    """Build a scripted client from a JSON file.

    Accepts a bare array or ``{"replies": [...], "loop": bool}``; each entry is
    a reply string or ``{"error": "transport" | "request" | "protocol"}``.
    """
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    loop = False
    if isinstance(payload, dict):
        loop = bool(payload.get("loop", False))
        entries = payload.get("replies")
    else:
        entries = payload
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"script file {path} must hold a non-empty list of replies")
    errors = {"transport": TransportError, "request": RequestError, "protocol": ProtocolError}
    script: list = []
    for entry in entries:
        if isinstance(entry, str):
            script.append(entry)
        elif isinstance(entry, dict) and entry.get("error") in errors:
            script.append(errors[entry["error"]](entry.get("message", f"scripted {entry['error']} failure")))
        else:
            raise ValueError(f"bad script entry: {entry!r}")
    return ScriptedVlmClient(script, loop=loop)


def client_from_config(config: ClientConfig) -> VlmClient:
    """HTTP client, or a scripted one when the URL is ``scripted:<path>``."""
    if config.endpoint_url.startswith("scripted:"):
        return load_script(config.endpoint_url[len("scripted:"):])
    return HttpVlmClient(config)
