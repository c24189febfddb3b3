"""Event-sourced conversation persistence.

One JSONL file per conversation under ``<data_dir>/conversations/``, one
event per line: ``{"seq", "ts", "type", "payload"}``.  Appends are flushed
and fsynced before returning; sequence numbers are assigned under a
per-conversation lock so concurrent writers see a gap-free 1..n range.
Replaying a log reconstructs a finished run without any model traffic.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from .errors import DbChatError
from .values import canonical_json

EVENT_TYPES = (
    "user_message",
    "plan",
    "agent_request",
    "agent_response",
    "chart",
    "final",
    "error",
)

TITLE_MAX_CHARS = 80


class StorageError(DbChatError):
    pass


class UnknownConversationError(DbChatError):
    def __init__(self, conversation_id: str):
        self.conversation_id = conversation_id
        super().__init__(f"unknown conversation {conversation_id!r}")


@dataclass(frozen=True)
class Event:
    seq: int
    ts: str  # RFC-3339 UTC
    type: str
    payload: Any

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "ts": self.ts, "type": self.type, "payload": self.payload}


@dataclass(frozen=True)
class ConversationIndex:
    conversation_id: str
    title: str
    created_at: str
    event_count: int


@dataclass
class LoadResult:
    events: list[Event]
    torn_tail_dropped: bool = False

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


def _utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


class EventStore:
    """Append-only per-conversation logs rooted at a data directory."""

    def __init__(self, data_dir: str | Path, clock: Callable[[], str] | None = None):
        self.root = Path(data_dir) / "conversations"
        self._clock = clock or _utc_now_rfc3339
        self._locks: dict[str, threading.Lock] = {}
        self._seqs: dict[str, int] = {}
        self._registry_lock = threading.Lock()

    def now(self) -> str:
        """Current timestamp from the store's (injectable) clock."""
        return self._clock()

    def _path(self, conversation_id: str) -> Path:
        return self.root / f"{conversation_id}.jsonl"

    def _lock_for(self, conversation_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(conversation_id, threading.Lock())

    def create_conversation(self) -> str:
        """Allocate the next sequential conversation id and create its log."""
        with self._registry_lock:
            try:
                self.root.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StorageError(f"cannot create store directory: {exc}") from exc
            n = 1
            while self._path(f"conv-{n:06d}").exists():
                n += 1
            conversation_id = f"conv-{n:06d}"
            try:
                self._path(conversation_id).touch()
            except OSError as exc:
                raise StorageError(f"cannot create conversation log: {exc}") from exc
            self._locks.setdefault(conversation_id, threading.Lock())
            self._seqs[conversation_id] = 0
            return conversation_id

    def conversation_exists(self, conversation_id: str) -> bool:
        return self._path(conversation_id).exists()

    def append_event(self, conversation_id: str, type: str, payload: Any) -> int:
        """Durably append one event; returns its sequence number."""
        if type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {type!r}")
        path = self._path(conversation_id)
        with self._lock_for(conversation_id):
            if conversation_id not in self._seqs:
                self._seqs[conversation_id] = len(self.load_events(conversation_id).events) \
                    if path.exists() else 0
            seq = self._seqs[conversation_id] + 1
            event = Event(seq=seq, ts=self._clock(), type=type, payload=payload)
            line = canonical_json(event.to_dict()) + "\n"
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"append failed for {conversation_id}: {exc}") from exc
            self._seqs[conversation_id] = seq
            return seq

    def load_events(self, conversation_id: str) -> LoadResult:
        """All events in ascending seq; a torn final line is dropped and flagged."""
        path = self._path(conversation_id)
        if not path.exists():
            raise UnknownConversationError(conversation_id)
        events: list[Event] = []
        torn = False
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"read failed for {conversation_id}: {exc}") from exc
        lines = raw.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for i, line in enumerate(lines):
            try:
                doc = json.loads(line)
                events.append(
                    Event(seq=int(doc["seq"]), ts=str(doc["ts"]), type=str(doc["type"]),
                          payload=doc["payload"])
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                if i == len(lines) - 1:
                    torn = True
                    break
                raise StorageError(
                    f"corrupt event at {conversation_id}:{i + 1}: {exc}"
                ) from exc
        return LoadResult(events=events, torn_tail_dropped=torn)

    def list_conversations(self) -> list[ConversationIndex]:
        """Indexes for every conversation, newest first; also refreshes the
        advisory ``index.json`` cache (rebuildable from the logs)."""
        if not self.root.exists():
            return []
        indexes: list[ConversationIndex] = []
        for path in sorted(self.root.glob("*.jsonl")):
            conversation_id = path.stem
            loaded = self.load_events(conversation_id)
            title = ""
            created_at = ""
            for event in loaded.events:
                if not created_at:
                    created_at = event.ts
                if event.type == "user_message" and not title:
                    text = str(event.payload.get("text", "")) if isinstance(event.payload, dict) else str(event.payload)
                    title = text[:TITLE_MAX_CHARS]
            indexes.append(
                ConversationIndex(
                    conversation_id=conversation_id,
                    title=title,
                    created_at=created_at,
                    event_count=len(loaded.events),
                )
            )
        indexes.sort(key=lambda ix: (ix.created_at, ix.conversation_id), reverse=True)
        try:
            cache = [ix.__dict__ for ix in indexes]
            (self.root / "index.json").write_text(
                canonical_json(cache) + "\n", encoding="utf-8"
            )
        except OSError:
            pass  # the cache is advisory
        return indexes
