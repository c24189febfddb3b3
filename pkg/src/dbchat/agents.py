"""Multi-agent framework: a planner decomposes a goal into role-addressed
steps, worker agents execute them through the model gateway, an aggregator
assembles the results, and every inter-agent message is archived.

Archive accounting is exact: one plan message per run plus one request and
one response per step, regardless of repair re-prompts (the archive records
the logical exchange, not raw gateway traffic).  Replaying an archived
conversation reconstructs the same outputs with zero model calls.
"""

from __future__ import annotations

import json
import re
import sqlite3
import threading
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterator

from . import datachat
from .errors import DbChatError
from .smmf import Gateway, ModelRequest
from .store import EventStore, UnknownConversationError
from .values import ChartSpec, PlanStep, ResultTable, TaskPlan, Value

AGENT_EVENT_TYPES = ("plan", "agent_request", "agent_response")

AGGREGATOR_ROLE = "aggregator"
PLANNER_ROLE = "planner"


def load_prompt(name: str) -> str:
    return resources.files("dbchat").joinpath("prompts", name).read_text(encoding="utf-8")


PLANNER_TEMPLATE = load_prompt("planner.txt")
STEP_TEMPLATE = load_prompt("step.txt")


class EmptyGoalError(DbChatError):
    def __init__(self):
        super().__init__("goal is empty")


class PlanParseError(DbChatError):
    def __init__(self, raw_response: str):
        self.raw_response = raw_response
        super().__init__("planner response is not a valid step array (after one repair attempt)")


class NoAgentForRoleError(DbChatError):
    def __init__(self, role: str):
        self.role = role
        super().__init__(f"no agent registered for role {role!r}")


class OutputParseError(DbChatError):
    def __init__(self, raw_response: str):
        self.raw_response = raw_response
        super().__init__("agent output could not be converted after retries")


class _ShapeError(ValueError):
    """Internal: model output does not fit the required shape; retryable."""


@dataclass(frozen=True)
class AgentProfile:
    name: str
    role: str
    system_prompt: str
    max_retries: int = 1

    def __post_init__(self) -> None:
        if not self.role:
            raise ValueError("agent role must be non-empty")


@dataclass(frozen=True)
class AgentMessage:
    id: str
    conversation_id: str
    sender: str  # agent name or "user"
    receiver: str
    content: Value
    turn: int
    created_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "conversation_id": self.conversation_id,
            "sender": self.sender,
            "receiver": self.receiver,
            "content": self.content.to_dict(),
            "turn": self.turn,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AgentMessage:
        return cls(
            id=d["id"],
            conversation_id=d["conversation_id"],
            sender=d["sender"],
            receiver=d["receiver"],
            content=Value.from_dict(d["content"]),
            turn=int(d["turn"]),
            created_at=d["created_at"],
        )


class Archive:
    """Per-conversation agent-message log; turn assignment is atomic."""

    def __init__(self, store: EventStore, conversation_id: str):
        self.store = store
        self.conversation_id = conversation_id
        self._lock = threading.Lock()
        try:
            events = store.load_events(conversation_id).events
        except UnknownConversationError:
            events = []
        self._turn = sum(1 for e in events if e.type in AGENT_EVENT_TYPES)

    def record(self, event_type: str, sender: str, receiver: str, content: Value) -> AgentMessage:
        if event_type not in AGENT_EVENT_TYPES:
            raise ValueError(f"not an agent event type: {event_type!r}")
        with self._lock:
            self._turn += 1
            message = AgentMessage(
                id=f"m{self._turn:04d}",
                conversation_id=self.conversation_id,
                sender=sender,
                receiver=receiver,
                content=content,
                turn=self._turn,
                created_at=self.store.now(),
            )
            self.store.append_event(self.conversation_id, event_type, message.to_dict())
            return message

    def agent_message_count(self) -> int:
        return self._turn


@dataclass
class AgentRuntime:
    """Shared handles for a family of agents: profile registry, model
    gateway, archive store, and the optional knowledge/database handles."""

    profiles: dict[str, AgentProfile] = field(default_factory=dict)
    gateway: Gateway | None = None
    store: EventStore | None = None
    conversation_id: str | None = None
    model: str = "mock-1"
    temperature: float = 0.0
    max_tokens: int = 4096
    knowledge: Any = None
    database: sqlite3.Connection | None = None
    chart_via_sql: bool = False
    _archives: dict[str, Archive] = field(default_factory=dict, repr=False)
    _archives_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def register(self, profile: AgentProfile) -> None:
        if profile.name in self.profiles:
            raise ValueError(f"agent name {profile.name!r} already registered")
        self.profiles[profile.name] = profile

    def profile_for_role(self, role: str) -> AgentProfile | None:
        for profile in self.profiles.values():
            if profile.role == role:
                return profile
        return None

    def for_conversation(self, conversation_id: str) -> AgentRuntime:
        """Shallow copy bound to one conversation; shares registry, gateway,
        store, and the archive cache (so turn assignment stays serialized)."""
        clone = AgentRuntime(
            profiles=self.profiles,
            gateway=self.gateway,
            store=self.store,
            conversation_id=conversation_id,
            model=self.model,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            knowledge=self.knowledge,
            database=self.database,
            chart_via_sql=self.chart_via_sql,
        )
        clone._archives = self._archives
        clone._archives_lock = self._archives_lock
        return clone

    def archive(self) -> Archive:
        if self.conversation_id is None:
            raise ValueError("runtime is not bound to a conversation")
        with self._archives_lock:
            archive = self._archives.get(self.conversation_id)
            if archive is None:
                archive = Archive(self.store, self.conversation_id)
                self._archives[self.conversation_id] = archive
            return archive

    def complete(self, messages: list[dict[str, str]]) -> str:
        request = ModelRequest(
            model=self.model,
            messages=messages,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
        )
        return self.gateway.chat_completion(request).content


_JSON_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL | re.IGNORECASE)


def _extract_json(raw: str, open_char: str, close_char: str) -> Any:
    candidates = [raw]
    fenced = _JSON_FENCE_RE.search(raw)
    if fenced:
        candidates.insert(0, fenced.group(1))
    start = raw.find(open_char)
    end = raw.rfind(close_char)
    if start != -1 and end > start:
        candidates.append(raw[start : end + 1])
    for candidate in candidates:
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue
    raise _ShapeError(f"no JSON document delimited by {open_char}...{close_char} found")


def _parse_plan(goal: str, raw: str) -> TaskPlan:
    doc = _extract_json(raw, "[", "]")
    if not isinstance(doc, list) or not doc:
        raise _ShapeError("expected a non-empty JSON array of steps")
    steps = []
    for item in doc:
        if not isinstance(item, dict):
            raise _ShapeError("every step must be a JSON object")
        try:
            steps.append(
                PlanStep(
                    index=int(item["index"]),
                    description=str(item["description"]),
                    agent_role=str(item["agent_role"]),
                    output_kind=str(item["output_kind"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise _ShapeError(f"malformed step: {exc}") from exc
    try:
        return TaskPlan(goal=goal, steps=tuple(steps))
    except ValueError as exc:
        raise _ShapeError(str(exc)) from exc


def plan(goal: str, ctx: AgentRuntime) -> TaskPlan:
    """Ask the planner for a step array; one repair round-trip on parse
    failure; the accepted plan is archived as an agent message."""
    if not goal.strip():
        raise EmptyGoalError()
    planner = ctx.profile_for_role(PLANNER_ROLE)
    system = planner.system_prompt if planner else "You plan data-analysis workflows."
    roles = sorted({p.role for p in ctx.profiles.values()})
    user = PLANNER_TEMPLATE.format(roles=", ".join(roles), goal=goal)
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]
    raw = ctx.complete(messages)
    try:
        task_plan = _parse_plan(goal, raw)
    except _ShapeError as err:
        repair = messages + [
            {"role": "assistant", "content": raw},
            {
                "role": "user",
                "content": (
                    f"The previous response could not be parsed as the required JSON array ({err}). "
                    "Respond again with only the JSON array."
                ),
            },
        ]
        raw = ctx.complete(repair)
        try:
            task_plan = _parse_plan(goal, raw)
        except _ShapeError:
            raise PlanParseError(raw) from None
    ctx.archive().record(
        "plan",
        sender=planner.name if planner else PLANNER_ROLE,
        receiver="user",
        content=Value.plan(task_plan),
    )
    return task_plan


_CHART_HINT_RE = re.compile(r"\b(donut|bar|area|line|table)\b", re.IGNORECASE)


def _chart_hint(description: str) -> str | None:
    match = _CHART_HINT_RE.search(description)
    return match.group(1).lower() if match else None


def _convert_output(step: PlanStep, raw: str, ctx: AgentRuntime) -> Value:
    if step.output_kind == "text":
        return Value.text(raw)
    if step.output_kind == "table":
        doc = _extract_json(raw, "{", "}")
        try:
            return Value.table(ResultTable.from_dict(doc))
        except (KeyError, TypeError, ValueError) as exc:
            raise _ShapeError(f"malformed table: {exc}") from exc
    # chart: either a ChartSpec JSON document (mock path) or SQL that the
    # data layer executes and converts (live path), per runtime config.
    if ctx.chart_via_sql:
        sql = datachat.extract_sql(raw)
        if sql is None:
            raise _ShapeError("no SQL statement in response")
        try:
            datachat.validate_sql(sql)
            table = datachat.execute_sql(sql, ctx.database)
            return Value.chart(datachat.rows_to_chart(table, hint=_chart_hint(step.description)))
        except DbChatError as exc:
            raise _ShapeError(str(exc)) from exc
    doc = _extract_json(raw, "{", "}")
    try:
        return Value.chart(ChartSpec.from_dict(doc))
    except ValueError as exc:
        raise _ShapeError(str(exc)) from exc


def dispatch(step: PlanStep, upstream: dict[str, Value], ctx: AgentRuntime) -> Value:
    """Send one step to its role-matched agent and convert the reply into a
    value of the step's output kind.

    Raises :class:`NoAgentForRoleError` before any model traffic when the
    role is unregistered; re-prompts up to the profile's max_retries on
    malformed output, then raises :class:`OutputParseError`.  Exactly one
    request and one response message are archived per call.
    """
    profile = ctx.profile_for_role(step.agent_role)
    if profile is None:
        raise NoAgentForRoleError(step.agent_role)
    orchestrator = ctx.profile_for_role(PLANNER_ROLE)
    sender = orchestrator.name if orchestrator else "user"
    upstream_text = "".join(f"- {k}: {v.as_text()}\n" for k, v in sorted(upstream.items()))
    user = STEP_TEMPLATE.format(index=step.index, description=step.description, upstream=upstream_text)
    archive = ctx.archive()
    archive.record("agent_request", sender=sender, receiver=profile.name, content=Value.text(user))
    conversation = [
        {"role": "system", "content": profile.system_prompt},
        {"role": "user", "content": user},
    ]
    raw = ""
    for _ in range(profile.max_retries + 1):
        try:
            raw = ctx.complete(conversation)
        except DbChatError as exc:
            archive.record("agent_response", sender=profile.name, receiver=sender, content=Value.error(str(exc)))
            raise
        try:
            value = _convert_output(step, raw, ctx)
        except _ShapeError as err:
            conversation = conversation + [
                {"role": "assistant", "content": raw},
                {
                    "role": "user",
                    "content": f"That response could not be used ({err}). Respond again in the required format.",
                },
            ]
            continue
        archive.record("agent_response", sender=profile.name, receiver=sender, content=value)
        return value
    archive.record(
        "agent_response", sender=profile.name, receiver=sender,
        content=Value.error(f"unusable output after retries: {raw[:200]}"),
    )
    raise OutputParseError(raw)


def _record_missing_role_pair(ctx: AgentRuntime, step: PlanStep, message: str) -> None:
    """Keep archive accounting exact when a step never reached dispatch."""
    archive = ctx.archive()
    orchestrator = ctx.profile_for_role(PLANNER_ROLE)
    sender = orchestrator.name if orchestrator else "user"
    archive.record(
        "agent_request", sender=sender, receiver=step.agent_role,
        content=Value.text(f"Step {step.index}: {step.description}"),
    )
    archive.record(
        "agent_response", sender=step.agent_role, receiver=sender,
        content=Value.error(message),
    )


def run_goal_events(goal: str, ctx: AgentRuntime) -> Iterator[tuple[str, Any]]:
    """Drive a whole goal, yielding progress as it happens.

    Yields ("plan", TaskPlan), then per step ("step_start", step) followed by
    ("step_result" | "error", (step, value)); the aggregator's result arrives
    as ("final", (step, value)).  Failed non-aggregator steps yield an error
    value and execution continues.
    """
    if ctx.conversation_id is None:
        ctx.conversation_id = ctx.store.create_conversation()
    task_plan = plan(goal, ctx)
    yield ("plan", task_plan)
    ordered = [s for s in task_plan.steps if s.agent_role != AGGREGATOR_ROLE] + [
        s for s in task_plan.steps if s.agent_role == AGGREGATOR_ROLE
    ]
    results: dict[int, Value] = {}
    for step in ordered:
        yield ("step_start", step)
        upstream: dict[str, Value] = {}
        if step.agent_role == AGGREGATOR_ROLE:
            upstream = {f"step{idx:02d}": value for idx, value in sorted(results.items())}
        try:
            value = dispatch(step, upstream, ctx)
        except NoAgentForRoleError as exc:
            _record_missing_role_pair(ctx, step, str(exc))
            value = Value.error(str(exc))
        except DbChatError as exc:
            value = Value.error(str(exc))
        results[step.index] = value
        if step.agent_role == AGGREGATOR_ROLE:
            if value.kind == "error":
                yield ("error", (step, value))
            yield ("final", (step, value))
        elif value.kind == "error":
            yield ("error", (step, value))
        else:
            yield ("step_result", (step, value))
    if not any(s.agent_role == AGGREGATOR_ROLE for s in task_plan.steps) and ordered:
        yield ("final", (None, results[ordered[-1].index]))


def run_goal(goal: str, ctx: AgentRuntime) -> list[Value]:
    """Plan, dispatch every step, return all step outputs (aggregator last).

    Archives exactly 1 + 2 * len(steps) agent messages.
    """
    outputs: list[Value] = []
    for kind, payload in run_goal_events(goal, ctx):
        if kind in ("step_result", "error"):
            _, value = payload
            outputs.append(value)
        elif kind == "final":
            step, value = payload
            if step is not None and value.kind != "error":
                outputs.append(value)
            elif step is not None and value.kind == "error":
                pass  # already appended by the error event
    return outputs


def replay_history(conversation_id: str, store: EventStore) -> list[AgentMessage]:
    """Archived agent messages in ascending turn order; no model traffic."""
    loaded = store.load_events(conversation_id)
    messages = [
        AgentMessage.from_dict(e.payload)
        for e in loaded.events
        if e.type in AGENT_EVENT_TYPES
    ]
    messages.sort(key=lambda m: m.turn)
    return messages


def replay_outputs(conversation_id: str, store: EventStore) -> list[Value]:
    """Reconstruct a finished run's step outputs from the archive alone."""
    loaded = store.load_events(conversation_id)
    return [
        Value.from_dict(e.payload["content"])
        for e in loaded.events
        if e.type == "agent_response"
    ]


def demo_profiles() -> dict[str, AgentProfile]:
    """The agent registry used by the offline sales-report demo."""
    profiles = [
        AgentProfile(
            name="planner",
            role=PLANNER_ROLE,
            system_prompt="You are the planning agent for data-analysis goals.",
        ),
        AgentProfile(
            name="chart_generator",
            role="chart_generator",
            system_prompt=(
                "You produce chart descriptions as a single JSON object with keys "
                "chart_type, title, dimension, measure, data."
            ),
        ),
        AgentProfile(
            name="aggregator",
            role=AGGREGATOR_ROLE,
            system_prompt=(
                "You aggregate step results into a short report, mentioning any "
                "step that failed."
            ),
        ),
        AgentProfile(
            name="sql_generator",
            role="sql_generator",
            system_prompt="You translate questions into a single SQL SELECT statement.",
        ),
    ]
    return {p.name: p for p in profiles}
