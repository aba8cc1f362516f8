"""OpenAI-compatible chat-completions client with retry and record/replay.

Three transport modes: ``live`` talks HTTP, ``record`` is live plus persisting
each response under a stable request hash, and ``replay`` serves persisted
responses with zero network. Replay keys are a digest over the canonical JSON
of turns and parameters, so they are stable across field ordering, runs, and
machines.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from threading import BoundedSemaphore, Lock
from typing import Literal, Optional

from .errors import SinogateError

Role = Literal["system", "user", "assistant"]

DEFAULT_TEMPERATURE = 0.7
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o"


class AuthMissing(SinogateError):
    pass


class FixtureMissing(SinogateError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no recorded fixture for request hash {key}")


class UpstreamFailure(SinogateError):
    def __init__(self, status: Optional[int], attempts: int, detail: str = ""):
        self.status = status
        self.attempts = attempts
        super().__init__(
            f"upstream failure (status={status}) after {attempts} attempt(s) {detail}".rstrip()
        )


@dataclass(frozen=True)
class GenerationParams:
    model_id: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: Optional[int] = None
    seed: Optional[int] = None  # only sent when set; endpoints may ignore it

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class ChatTurn:
    role: Role
    content: str

    def __post_init__(self):
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} turn must have non-empty content")


@dataclass(frozen=True)
class CompletionRequest:
    turns: tuple[ChatTurn, ...]
    params: GenerationParams

    def __post_init__(self):
        system_turns = [t for t in self.turns if t.role == "system"]
        if len(system_turns) != 1 or self.turns[0].role != "system":
            raise ValueError("request must have exactly one system turn, first")


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(self.input_tokens + other.input_tokens,
                     self.output_tokens + other.output_tokens)


@dataclass(frozen=True)
class CompletionResponse:
    content: str
    usage: Usage
    latency: float
    raw: dict
    truncated: bool = False


def canonical_request(request: CompletionRequest) -> dict:
    doc = {
        "messages": [{"role": t.role, "content": t.content} for t in request.turns],
        "model": request.params.model_id,
        "temperature": request.params.temperature,
    }
    if request.params.max_output_tokens is not None:
        doc["max_tokens"] = request.params.max_output_tokens
    if request.params.seed is not None:
        doc["seed"] = request.params.seed
    return doc


def request_hash(request: CompletionRequest) -> str:
    blob = json.dumps(canonical_request(request), sort_keys=True,
                      separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _parse_body(body: dict, latency: float) -> CompletionResponse:
    choice = body["choices"][0]
    usage = body.get("usage") or {}
    return CompletionResponse(
        content=choice["message"]["content"],
        usage=Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)),
        latency=latency,
        raw=body,
        truncated=choice.get("finish_reason") == "length",
    )


class TransientNetworkError(Exception):
    """Timeout or connection failure; eligible for retry."""


class Transport:
    mode: str

    def send(self, payload: dict) -> tuple[int, dict]:
        raise NotImplementedError


class LiveTransport(Transport):
    mode = "live"

    def __init__(self, base_url: str = DEFAULT_BASE_URL,
                 api_key: Optional[str] = None, timeout: float = 120.0):
        if not api_key:
            raise AuthMissing("no API key configured for live transport")
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def send(self, payload: dict) -> tuple[int, dict]:
        import httpx

        try:
            resp = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransientNetworkError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            body = {"error": resp.text}
        return resp.status_code, body


class RecordTransport(Transport):
    """Delegates to an inner transport, persisting one JSON file per request hash."""

    mode = "record"

    def __init__(self, inner: Transport, fixture_dir: str | Path):
        self.inner = inner
        self.fixture_dir = Path(fixture_dir)
        self._lock = Lock()

    def send(self, payload: dict) -> tuple[int, dict]:
        return self.inner.send(payload)

    def store(self, key: str, request: CompletionRequest,
              response: CompletionResponse) -> None:
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "request": canonical_request(request),
            "response": {
                "content": response.content,
                "usage": {"input_tokens": response.usage.input_tokens,
                          "output_tokens": response.usage.output_tokens},
                "truncated": response.truncated,
            },
        }
        with self._lock:
            path = self.fixture_dir / f"{key}.json"
            path.write_text(json.dumps(doc, ensure_ascii=False, indent=2,
                                       sort_keys=True) + "\n", "utf-8")


class ReplayTransport(Transport):
    mode = "replay"

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)

    def load(self, key: str) -> CompletionResponse:
        path = self.fixture_dir / f"{key}.json"
        if not path.exists():
            raise FixtureMissing(key)
        doc = json.loads(path.read_text("utf-8"))
        resp = doc["response"]
        return CompletionResponse(
            content=resp["content"],
            usage=Usage(resp["usage"]["input_tokens"], resp["usage"]["output_tokens"]),
            latency=0.0,
            raw=doc,
            truncated=resp.get("truncated", False),
        )


@dataclass
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 1.0
    max_delay: float = 60.0

    def delay(self, attempt: int, rng: random.Random) -> float:
        # exponential backoff with full jitter
        return rng.uniform(0, min(self.max_delay, self.base_delay * 2 ** (attempt - 1)))


def _is_transient(status: int) -> bool:
    return status == 429 or 500 <= status < 600


def complete(request: CompletionRequest, transport: Transport,
             retry: RetryPolicy | None = None,
             sleep=time.sleep, rng: random.Random | None = None) -> CompletionResponse:
    """Execute one chat completion through the given transport.

    Retries timeouts, rate limits, and 5xx with jittered exponential backoff;
    other client errors fail immediately. Replay performs no network at all.
    """
    retry = retry or RetryPolicy()
    rng = rng or random.Random()
    key = request_hash(request)
    if isinstance(transport, ReplayTransport):
        return transport.load(key)
    payload = canonical_request(request)
    last_status: Optional[int] = None
    for attempt in range(1, retry.max_attempts + 1):
        start = time.monotonic()
        try:
            status, body = transport.send(payload)
        except TransientNetworkError:
            last_status = None
            if attempt < retry.max_attempts:
                sleep(retry.delay(attempt, rng))
            continue
        if status == 200:
            response = _parse_body(body, time.monotonic() - start)
            if isinstance(transport, RecordTransport):
                transport.store(key, request, response)
            return response
        last_status = status
        if not _is_transient(status):
            raise UpstreamFailure(status, attempt, detail=str(body)[:200])
        if attempt < retry.max_attempts:
            sleep(retry.delay(attempt, rng))
    raise UpstreamFailure(last_status, retry.max_attempts)


@dataclass
class ClientConfig:
    api_key: Optional[str] = None
    base_url: str = DEFAULT_BASE_URL
    model: str = DEFAULT_MODEL
    concurrency: int = 1  # sequential by default to respect rate limits
    timeout: float = 120.0
    # USD per 1k tokens, keyed by model id: {"gpt-4o": {"input": .., "output": ..}}
    price_table: dict = field(default_factory=dict)

    @classmethod
    def from_env(cls, env=os.environ) -> "ClientConfig":
        cfg = cls()
        cfg.api_key = env.get("SINOGATE_API_KEY") or env.get("OPENAI_API_KEY")
        cfg.base_url = env.get("SINOGATE_BASE_URL", cfg.base_url)
        cfg.model = env.get("SINOGATE_MODEL", cfg.model)
        if env.get("SINOGATE_CONCURRENCY"):
            cfg.concurrency = int(env["SINOGATE_CONCURRENCY"])
        price_path = env.get("SINOGATE_PRICE_TABLE")
        if price_path and Path(price_path).exists():
            cfg.price_table = json.loads(Path(price_path).read_text("utf-8"))
        return cfg


class Client:
    """Shareable client: transport + bounded in-flight requests + usage totals."""

    def __init__(self, transport: Transport, config: ClientConfig | None = None,
                 retry: RetryPolicy | None = None, sleep=time.sleep):
        self.transport = transport
        self.config = config or ClientConfig()
        self.retry = retry or RetryPolicy()
        self._sleep = sleep
        self._gate = BoundedSemaphore(max(1, self.config.concurrency))
        self._usage_lock = Lock()
        self.total_usage = Usage()
        self.call_count = 0

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._gate:
            response = complete(request, self.transport, self.retry, sleep=self._sleep)
        with self._usage_lock:
            self.total_usage = self.total_usage + response.usage
            self.call_count += 1
        return response

    def cost(self) -> Optional[float]:
        """Total cost from the configured price table, or None if unpriced."""
        prices = self.config.price_table.get(self.config.model)
        if not prices:
            return None
        return (self.total_usage.input_tokens / 1000 * prices["input"]
                + self.total_usage.output_tokens / 1000 * prices["output"])
