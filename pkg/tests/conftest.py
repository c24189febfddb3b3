from __future__ import annotations

import socket
import threading
import time
from contextlib import contextmanager

import pytest

from dbchat.agents import AgentRuntime, demo_profiles
from dbchat.demo import load_mock_script
from dbchat.smmf import Gateway, Registry
from dbchat.store import EventStore


class FixedClock:
    """Deterministic monotonic clock for registries."""

    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


def make_runtime(data_dir, script=None, new_conversation: bool = True) -> AgentRuntime:
    """A fully wired offline runtime: demo profiles + one scripted mock worker."""
    gateway = Gateway(Registry(clock=FixedClock()))
    gateway.add_worker("mock-1", "internal:mock", script=script or load_mock_script())
    store = EventStore(data_dir)
    runtime = AgentRuntime(profiles=demo_profiles(), gateway=gateway, store=store)
    if new_conversation:
        runtime.conversation_id = store.create_conversation()
    return runtime


@pytest.fixture
def runtime(tmp_path) -> AgentRuntime:
    return make_runtime(tmp_path)


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@contextmanager
def live_server(app):
    """A real uvicorn server on an ephemeral port (needed where in-process
    test clients cannot overlap requests or stream incrementally)."""
    import uvicorn

    port = free_port()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start in time")
        time.sleep(0.01)
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)
