"""Service-oriented multi-model management.

A registry holds worker metadata (health derived from heartbeats and
consecutive failures), and a gateway routes chat-completion and embedding
traffic across workers: round-robin over healthy workers of the requested
model, failing over on transport errors with each worker tried at most once
per request.

Two backends exist: ``internal:mock`` replays a scripted response table
(the whole demo runs offline against it) and any other endpoint is treated
as a remote chat-completion HTTP server.
"""

from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

import httpx

from .errors import DbChatError

DEFAULT_TTL_SECONDS = 30.0
FAILURE_THRESHOLD = 3


class InvalidEndpointError(DbChatError):
    pass


class UnknownWorkerError(DbChatError):
    def __init__(self, worker_id: str):
        self.worker_id = worker_id
        super().__init__(f"unknown worker {worker_id!r}")


class NoWorkerAvailableError(DbChatError):
    def __init__(self, model: str):
        self.model = model
        super().__init__(f"no healthy worker serves model {model!r}")


class AllWorkersFailedError(DbChatError):
    def __init__(self, model: str, attempts: int):
        self.model = model
        self.attempts = attempts
        super().__init__(f"all {attempts} workers failed for model {model!r}")


class TransportError(DbChatError):
    """A worker could not be reached or returned a malformed reply."""


@dataclass
class ModelRequest:
    model: str
    messages: list[dict[str, str]]
    temperature: float = 0.0
    max_tokens: int = 1024
    stream: bool = False

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        last_role = self.messages[-1].get("role")
        if last_role not in ("user", "system"):
            raise ValueError(f"last message role must be user or system, got {last_role!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    def last_user_content(self) -> str:
        for message in reversed(self.messages):
            if message.get("role") == "user":
                return message.get("content", "")
        return self.messages[-1].get("content", "")


@dataclass
class ModelResponse:
    content: str
    model: str
    finish_reason: str  # stop | length | error
    usage: dict[str, int]


@dataclass
class WorkerRecord:
    worker_id: str
    model_name: str
    endpoint: str
    capabilities: frozenset[str]
    last_heartbeat: float
    consecutive_failures: int = 0


def _count_tokens(text: str) -> int:
    """The mock's token unit is a whitespace-delimited word."""
    return len(text.split())


def split_into_deltas(content: str) -> list[str]:
    """One delta per word (whitespace glued to the preceding word) such that
    the concatenation equals the original content exactly."""
    if not content:
        return []
    parts = re.findall(r"\S+\s*", content)
    if not parts:
        return [content]
    head_len = len(content) - sum(len(p) for p in parts)
    if head_len:
        parts[0] = content[:head_len] + parts[0]
    return parts


class MockBackend:
    """Deterministic scripted worker.

    The script maps a matcher to a canned response.  A matcher is either the
    exact last user message or ``contains:<substring>``; exact matchers are
    checked first, then contains matchers in script order.  A response is a
    plain string, ``{"content": ...}``, or ``{"error": ...}`` which simulates
    a transport failure.
    """

    def __init__(self, script: dict[str, Any] | None = None, embedder: Callable[[str], list[float]] | None = None):
        self.script = dict(script or {})
        self._embedder = embedder

    def _resolve(self, prompt: str) -> Any:
        for matcher, response in self.script.items():
            if not matcher.startswith("contains:") and matcher == prompt:
                return response
        for matcher, response in self.script.items():
            if matcher.startswith("contains:") and matcher[len("contains:"):] in prompt:
                return response
        return ""

    def chat(self, request: ModelRequest) -> ModelResponse:
        scripted = self._resolve(request.last_user_content())
        if isinstance(scripted, dict):
            if "error" in scripted:
                raise TransportError(str(scripted["error"]))
            content = str(scripted.get("content", ""))
        else:
            content = str(scripted)
        words = split_into_deltas(content)
        truncated = len(words) > request.max_tokens
        if truncated:
            content = "".join(words[: request.max_tokens]).rstrip()
        prompt_tokens = sum(_count_tokens(m.get("content", "")) for m in request.messages)
        return ModelResponse(
            content=content,
            model=request.model,
            finish_reason="length" if truncated else "stop",
            usage={"prompt_tokens": prompt_tokens, "completion_tokens": _count_tokens(content)},
        )

    def embed(self, texts: list[str]) -> list[list[float]]:
        if self._embedder is None:
            from .rag import encoder

            self._embedder = encoder.embed
        return [self._embedder(t) for t in texts]


class HttpBackend:
    """Remote worker speaking the de-facto chat-completion HTTP protocol."""

    def __init__(self, endpoint: str, timeout: float = 30.0, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def chat(self, request: ModelRequest) -> ModelResponse:
        body = {
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stream": False,
        }
        try:
            resp = self._client.post(f"{self.endpoint}/v1/chat/completions", json=body)
            resp.raise_for_status()
            doc = resp.json()
            choice = doc["choices"][0]
            return ModelResponse(
                content=choice["message"]["content"],
                model=doc.get("model", request.model),
                finish_reason=choice.get("finish_reason", "stop"),
                usage=doc.get("usage", {"prompt_tokens": 0, "completion_tokens": 0}),
            )
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"{self.endpoint}: {exc}") from exc

    def embed(self, texts: list[str]) -> list[list[float]]:
        try:
            resp = self._client.post(f"{self.endpoint}/v1/embeddings", json={"input": texts})
            resp.raise_for_status()
            return [item["embedding"] for item in resp.json()["data"]]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise TransportError(f"{self.endpoint}: {exc}") from exc


class Registry:
    """Worker metadata and health; safe for concurrent use."""

    def __init__(
        self,
        clock: Callable[[], float] | None = None,
        ttl: float = DEFAULT_TTL_SECONDS,
        failure_threshold: int = FAILURE_THRESHOLD,
    ):
        self._clock = clock or time.monotonic
        self.ttl = ttl
        self.failure_threshold = failure_threshold
        self._lock = threading.RLock()
        self._workers: dict[str, WorkerRecord] = {}
        self._order: list[str] = []  # registration order
        self._cursor: dict[str, int] = {}
        self._next_id = 1

    def register_worker(
        self,
        model_name: str,
        endpoint: str,
        capabilities: tuple[str, ...] | frozenset[str] = ("chat",),
    ) -> str:
        if not model_name.strip():
            raise InvalidEndpointError("model name must be non-empty")
        if not endpoint.strip():
            raise InvalidEndpointError("endpoint must be non-empty")
        with self._lock:
            for record in self._workers.values():
                if record.model_name == model_name and record.endpoint == endpoint:
                    record.consecutive_failures = 0
                    record.last_heartbeat = self._clock()
                    record.capabilities = frozenset(capabilities)
                    return record.worker_id
            worker_id = f"w-{self._next_id:04d}"
            self._next_id += 1
            self._workers[worker_id] = WorkerRecord(
                worker_id=worker_id,
                model_name=model_name,
                endpoint=endpoint,
                capabilities=frozenset(capabilities),
                last_heartbeat=self._clock(),
            )
            self._order.append(worker_id)
            return worker_id

    def heartbeat(self, worker_id: str) -> None:
        """Refresh liveness; an expired worker revives to healthy."""
        with self._lock:
            record = self._workers.get(worker_id)
            if record is None:
                raise UnknownWorkerError(worker_id)
            if self._clock() - record.last_heartbeat > self.ttl:
                record.consecutive_failures = 0
            record.last_heartbeat = self._clock()

    def get(self, worker_id: str) -> WorkerRecord:
        with self._lock:
            record = self._workers.get(worker_id)
            if record is None:
                raise UnknownWorkerError(worker_id)
            return record

    def status_of(self, worker_id: str) -> str:
        with self._lock:
            record = self.get(worker_id)
            if self._clock() - record.last_heartbeat > self.ttl:
                return "expired"
            if record.consecutive_failures >= self.failure_threshold:
                return "unhealthy"
            return "healthy"

    def record_failure(self, worker_id: str) -> None:
        with self._lock:
            self.get(worker_id).consecutive_failures += 1

    def record_success(self, worker_id: str) -> None:
        with self._lock:
            self.get(worker_id).consecutive_failures = 0

    def healthy_workers(self, model: str, capability: str = "chat") -> list[WorkerRecord]:
        with self._lock:
            return [
                self._workers[wid]
                for wid in self._order
                if self._workers[wid].model_name == model
                and capability in self._workers[wid].capabilities
                and self.status_of(wid) == "healthy"
            ]

    def select_worker(
        self, model: str, exclude: frozenset[str] | set[str] = frozenset(),
        capability: str = "chat",
    ) -> WorkerRecord:
        """Round-robin over healthy workers of the model (per-model cursor)."""
        with self._lock:
            pool = [w for w in self.healthy_workers(model, capability) if w.worker_id not in exclude]
            if not pool:
                raise NoWorkerAvailableError(model)
            cursor = self._cursor.get(model, 0)
            self._cursor[model] = cursor + 1
            return pool[cursor % len(pool)]

    def list_models(self) -> list[dict[str, Any]]:
        with self._lock:
            by_model: dict[str, list[dict[str, Any]]] = {}
            for wid in self._order:
                record = self._workers[wid]
                by_model.setdefault(record.model_name, []).append(
                    {
                        "worker_id": wid,
                        "endpoint": record.endpoint,
                        "capabilities": sorted(record.capabilities),
                        "status": self.status_of(wid),
                        "consecutive_failures": record.consecutive_failures,
                    }
                )
            return [
                {"model": model, "workers": workers}
                for model, workers in sorted(by_model.items())
            ]


class Gateway:
    """Routes chat-completion and embedding requests with health-based failover."""

    def __init__(self, registry: Registry | None = None):
        self.registry = registry or Registry()
        self._backends: dict[str, Any] = {}
        self._calls = 0  # every backend round-trip, for replay instrumentation
        self._lock = threading.Lock()

    @property
    def call_count(self) -> int:
        return self._calls

    def add_worker(
        self,
        model_name: str,
        endpoint: str,
        capabilities: tuple[str, ...] = ("chat", "embedding"),
        script: dict[str, Any] | None = None,
    ) -> str:
        worker_id = self.registry.register_worker(model_name, endpoint, capabilities)
        if endpoint == "internal:mock":
            self._backends[worker_id] = MockBackend(script)
        else:
            self._backends[worker_id] = HttpBackend(endpoint)
        return worker_id

    def set_backend(self, worker_id: str, backend: Any) -> None:
        self._backends[worker_id] = backend

    def _route(self, model: str, capability: str, call: Callable[[Any], Any]) -> Any:
        tried: set[str] = set()
        attempts = 0
        while True:
            try:
                worker = self.registry.select_worker(model, exclude=tried, capability=capability)
            except NoWorkerAvailableError:
                if attempts:
                    raise AllWorkersFailedError(model, attempts) from None
                raise
            backend = self._backends[worker.worker_id]
            with self._lock:
                self._calls += 1
            try:
                result = call(backend)
            except TransportError:
                self.registry.record_failure(worker.worker_id)
                tried.add(worker.worker_id)
                attempts += 1
                continue
            self.registry.record_success(worker.worker_id)
            return result

    def chat_completion(self, request: ModelRequest) -> ModelResponse:
        """Non-streamed completion (ignores ``request.stream``)."""
        return self._route(request.model, "chat", lambda b: b.chat(request))

    def stream_chat(self, request: ModelRequest) -> Iterator[str]:
        """Content deltas whose concatenation equals the non-streamed content."""
        response = self.chat_completion(request)
        yield from split_into_deltas(response.content)

    def embed(self, texts: list[str], model: str) -> list[list[float]]:
        return self._route(model, "embedding", lambda b: b.embed(texts))
