"""HTTP server layer: conversations with server-sent-event streaming of
agent progress, knowledge ingestion, workflow storage and runs, worker
registration, and a chat-completion passthrough.

The server is a thin adapter: every behavior here is also reachable by
driving the module layer directly.  SSE frames are exactly
``event: <type>\\ndata: <single-line JSON>\\n\\n``; every stream ends with one
``done`` frame, and the plan frame precedes any step frame.
"""

from __future__ import annotations

import email.policy
import re
import threading
from email.parser import BytesParser
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import agents, awel
from .agents import AgentRuntime
from .errors import DbChatError
from .rag.knowledge import KnowledgeSpaces
from .smmf import ModelRequest, NoWorkerAvailableError, split_into_deltas
from .store import UnknownConversationError
from .values import Value, canonical_json

SPACE_NAME_RE = re.compile(r"^[a-z0-9_-]+$")
MAX_UPLOAD_BYTES = 8 * 1024 * 1024


def sse_frame(event: str, data: Any) -> str:
    return f"event: {event}\ndata: {canonical_json(data)}\n\n"


def parse_multipart(content_type: str, body: bytes) -> list[tuple[str | None, bytes]]:
    """(filename, payload) pairs from a multipart/form-data body (stdlib only)."""
    header = f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n".encode()
    message = BytesParser(policy=email.policy.HTTP).parsebytes(header + body)
    if not message.is_multipart():
        raise ValueError("body is not multipart")
    parts: list[tuple[str | None, bytes]] = []
    for part in message.iter_parts():
        payload = part.get_payload(decode=True)
        if payload is None:
            continue
        parts.append((part.get_filename(), payload))
    return parts


def _coerce_input_value(raw: Any) -> Value:
    if isinstance(raw, dict) and "kind" in raw:
        return Value.from_dict(raw)
    if isinstance(raw, list):
        return Value.list_of([_coerce_input_value(item) for item in raw])
    return Value.text(str(raw))


def create_app(
    runtime: AgentRuntime,
    spaces: KnowledgeSpaces,
    api_key: str | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="dbchat", docs_url=None, redoc_url=None)
    dags: dict[str, awel.DagSpec] = {}
    dag_lock = threading.Lock()
    active_runs: set[str] = set()
    active_lock = threading.Lock()

    if api_key:

        @app.middleware("http")
        async def check_bearer(request: Request, call_next):
            if request.url.path.startswith(("/api/", "/v1/")):
                token = request.headers.get("authorization", "")
                if token != f"Bearer {api_key}":
                    return JSONResponse({"detail": "unauthorized"}, status_code=401)
            return await call_next(request)

    # -- conversations ---------------------------------------------------------

    @app.post("/api/conversations", status_code=201)
    async def create_conversation(request: Request):
        body = await request.json()
        first_message = str(body.get("first_message", "")).strip()
        if not first_message:
            return JSONResponse({"detail": "first_message must be non-empty"}, status_code=400)
        conversation_id = runtime.store.create_conversation()
        runtime.store.append_event(conversation_id, "user_message", {"text": first_message})
        return {"conversation_id": conversation_id}

    @app.get("/api/conversations")
    def list_conversations():
        return {
            "conversations": [
                {
                    "conversation_id": ix.conversation_id,
                    "title": ix.title,
                    "created_at": ix.created_at,
                    "event_count": ix.event_count,
                }
                for ix in runtime.store.list_conversations()
            ]
        }

    @app.get("/api/conversations/{conversation_id}")
    def replay_conversation(conversation_id: str):
        try:
            loaded = runtime.store.load_events(conversation_id)
        except UnknownConversationError:
            return JSONResponse({"detail": "unknown conversation"}, status_code=404)
        return {
            "conversation_id": conversation_id,
            "events": [e.to_dict() for e in loaded.events],
            "torn_tail_dropped": loaded.torn_tail_dropped,
        }

    def _goal_events(conversation_id: str, text: str) -> Iterator[str]:
        """Run the goal, framing progress as SSE and archiving the plan /
        chart / final / error events alongside the stream."""
        store = runtime.store
        bound = runtime.for_conversation(conversation_id)
        try:
            for kind, payload in agents.run_goal_events(text, bound):
                if kind == "plan":
                    yield sse_frame("plan", payload.to_dict())
                elif kind == "step_start":
                    yield sse_frame("step_start", payload.to_dict())
                elif kind == "step_result":
                    step, value = payload
                    if value.kind == "chart":
                        store.append_event(conversation_id, "chart", value.payload.to_dict())
                        yield sse_frame("chart", value.payload.to_dict())
                    else:
                        yield sse_frame(
                            "step_result", {"step": step.index, "value": value.to_dict()}
                        )
                elif kind == "error":
                    step, value = payload
                    data = {"step": step.index, "message": value.as_text()}
                    store.append_event(conversation_id, "error", data)
                    yield sse_frame("error", data)
                elif kind == "final":
                    _, value = payload
                    data = {"text": value.as_text()}
                    store.append_event(conversation_id, "final", data)
                    yield sse_frame("final", data)
        except Exception as exc:  # server boundary: degrade to an error event
            data = {"message": f"{type(exc).__name__}: {exc}"}
            store.append_event(conversation_id, "error", data)
            yield sse_frame("error", data)
        finally:
            with active_lock:
                active_runs.discard(conversation_id)
        yield sse_frame("done", {})

    @app.post("/api/conversations/{conversation_id}/messages")
    async def post_message(conversation_id: str, request: Request):
        if not runtime.store.conversation_exists(conversation_id):
            return JSONResponse({"detail": "unknown conversation"}, status_code=404)
        body = await request.json()
        text = str(body.get("text", "")).strip()
        if not text:
            return JSONResponse({"detail": "text must be non-empty"}, status_code=400)
        with active_lock:
            if conversation_id in active_runs:
                return JSONResponse(
                    {"detail": "a run is already active for this conversation"},
                    status_code=409,
                )
            active_runs.add(conversation_id)
        runtime.store.append_event(conversation_id, "user_message", {"text": text})
        return StreamingResponse(
            _goal_events(conversation_id, text), media_type="text/event-stream"
        )

    # -- knowledge ---------------------------------------------------------------

    @app.post("/api/knowledge/{space}/documents")
    async def upload_documents(space: str, request: Request):
        if not SPACE_NAME_RE.match(space):
            return JSONResponse({"detail": "bad space name"}, status_code=400)
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            return JSONResponse({"detail": "payload too large"}, status_code=413)
        content_type = request.headers.get("content-type", "")
        documents: list[tuple[str, str]] = []
        if content_type.startswith("multipart/"):
            try:
                parts = parse_multipart(content_type, body)
            except ValueError as exc:
                return JSONResponse({"detail": str(exc)}, status_code=400)
            for i, (filename, payload) in enumerate(parts):
                doc_id = Path(filename).stem if filename else f"part-{i}"
                documents.append((doc_id, payload.decode("utf-8", errors="replace")))
        else:
            doc_id = request.query_params.get("doc_id", "document")
            documents.append((doc_id, body.decode("utf-8", errors="replace")))
        if not documents:
            return JSONResponse({"detail": "no documents in body"}, status_code=400)
        total = sum(spaces.ingest(space, doc_id, text) for doc_id, text in documents)
        return {"chunks_indexed": total}

    # -- workflows ----------------------------------------------------------------

    @app.post("/api/dags", status_code=201)
    async def store_dag(request: Request):
        body = await request.json()
        source = str(body.get("dsl_source", ""))
        try:
            dag = awel.parse_dag_dsl(source)
        except awel.DslSyntaxError as exc:
            return JSONResponse(
                {"detail": str(exc), "line": exc.line, "col": exc.col}, status_code=422
            )
        except DbChatError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=422)
        violations = awel.validate(dag)
        if violations:
            return JSONResponse(
                {
                    "detail": "dag is invalid",
                    "violations": [
                        {"code": v.code, "message": v.message, "nodes": list(v.nodes)}
                        for v in violations
                    ],
                },
                status_code=422,
            )
        with dag_lock:
            dag_id = f"dag-{len(dags) + 1:04d}"
            dags[dag_id] = dag
        return {"dag_id": dag_id}

    @app.post("/api/dags/{dag_id}/run")
    async def run_dag(dag_id: str, request: Request):
        dag = dags.get(dag_id)
        if dag is None:
            return JSONResponse({"detail": "unknown dag"}, status_code=404)
        body = await request.json()
        inputs = {
            node_id: _coerce_input_value(raw)
            for node_id, raw in dict(body.get("inputs", {})).items()
        }
        conversation_id = runtime.store.create_conversation()
        bound = runtime.for_conversation(conversation_id)
        try:
            report = awel.execute(dag, inputs, bound)
        except DbChatError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=422)
        doc = report.to_dict()
        doc["conversation_id"] = conversation_id
        return doc

    # -- model management -----------------------------------------------------------

    @app.get("/api/models")
    def list_models():
        return {"models": runtime.gateway.registry.list_models()}

    @app.post("/api/workers/register")
    async def register_worker(request: Request):
        body = await request.json()
        try:
            worker_id = runtime.gateway.add_worker(
                str(body.get("model", "")),
                str(body.get("endpoint", "")),
                capabilities=tuple(body.get("capabilities", ("chat",))),
            )
        except DbChatError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        return {"worker_id": worker_id}

    @app.post("/api/workers/{worker_id}/heartbeat")
    def heartbeat(worker_id: str):
        try:
            runtime.gateway.registry.heartbeat(worker_id)
        except DbChatError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=404)
        return {"status": "ok"}

    # -- chat-completion passthrough ---------------------------------------------------

    @app.post("/v1/chat/completions")
    async def chat_completions(request: Request):
        body = await request.json()
        try:
            model_request = ModelRequest(
                model=str(body["model"]),
                messages=list(body["messages"]),
                temperature=float(body.get("temperature", 0.0)),
                max_tokens=int(body.get("max_tokens", 1024)),
                stream=bool(body.get("stream", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            return JSONResponse({"detail": f"bad request: {exc}"}, status_code=400)
        try:
            if not model_request.stream:
                response = runtime.gateway.chat_completion(model_request)
                return {
                    "id": "chatcmpl-dbchat",
                    "object": "chat.completion",
                    "model": response.model,
                    "choices": [
                        {
                            "index": 0,
                            "message": {"role": "assistant", "content": response.content},
                            "finish_reason": response.finish_reason,
                        }
                    ],
                    "usage": response.usage,
                }
            response = runtime.gateway.chat_completion(
                ModelRequest(
                    model=model_request.model,
                    messages=model_request.messages,
                    temperature=model_request.temperature,
                    max_tokens=model_request.max_tokens,
                )
            )
        except NoWorkerAvailableError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=503)
        except DbChatError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=502)

        def delta_stream() -> Iterator[str]:
            for delta in split_into_deltas(response.content):
                chunk = {
                    "id": "chatcmpl-dbchat",
                    "object": "chat.completion.chunk",
                    "model": response.model,
                    "choices": [
                        {"index": 0, "delta": {"content": delta}, "finish_reason": None}
                    ],
                }
                yield f"data: {canonical_json(chunk)}\n\n"
            yield "data: [DONE]\n\n"

        return StreamingResponse(delta_stream(), media_type="text/event-stream")

    @app.post("/v1/embeddings")
    async def embeddings(request: Request):
        body = await request.json()
        raw = body.get("input", [])
        texts = [str(t) for t in (raw if isinstance(raw, list) else [raw])]
        model = str(body.get("model", runtime.model))
        try:
            vectors = runtime.gateway.embed(texts, model=model)
        except NoWorkerAvailableError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=503)
        except DbChatError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=502)
        return {
            "object": "list",
            "model": model,
            "data": [
                {"object": "embedding", "index": i, "embedding": vec}
                for i, vec in enumerate(vectors)
            ],
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
