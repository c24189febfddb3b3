"""Shared value carriers passed between workflow nodes, agents, and the UI.

A :class:`Value` is the tagged union flowing along workflow edges and out of
agent dispatches: plain text, a query result table, a chart description, a
task plan, a list of values, a stream of values, or an error marker.  All
carriers serialize to a canonical JSON form (sorted keys, compact separators)
so that two runs with identical inputs produce byte-identical logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

CHART_TYPES = ("donut", "bar", "area", "line", "table")
OUTPUT_KINDS = ("chart", "table", "text")

DONUT_MAX_CATEGORIES = 12


def canonical_json(obj: Any) -> str:
    """Serialize to the package-wide canonical JSON form (one line, stable)."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), sort_keys=True)


@dataclass(frozen=True)
class ChartPoint:
    label: str
    value: float

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "value": self.value}


@dataclass(frozen=True)
class ChartSpec:
    """Declarative chart description rendered by the web UI or the terminal."""

    chart_type: str
    title: str
    dimension: str
    measure: str
    data: tuple[ChartPoint, ...]

    def __post_init__(self) -> None:
        if self.chart_type not in CHART_TYPES:
            raise ValueError(f"unknown chart_type {self.chart_type!r}")
        labels = [p.label for p in self.data]
        if len(set(labels)) != len(labels):
            raise ValueError("chart labels must be unique")
        for p in self.data:
            if not math.isfinite(p.value):
                raise ValueError(f"chart value for {p.label!r} is not finite")
        if self.chart_type == "donut":
            if len(self.data) > DONUT_MAX_CATEGORIES:
                raise ValueError(
                    f"donut supports at most {DONUT_MAX_CATEGORIES} categories"
                )
            if any(p.value < 0 for p in self.data):
                raise ValueError("donut values must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "chart_type": self.chart_type,
            "title": self.title,
            "dimension": self.dimension,
            "measure": self.measure,
            "data": [p.to_dict() for p in self.data],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ChartSpec:
        try:
            points = tuple(
                ChartPoint(label=str(p["label"]), value=float(p["value"]))
                for p in d["data"]
            )
            return cls(
                chart_type=d["chart_type"],
                title=str(d.get("title", "")),
                dimension=str(d["dimension"]),
                measure=str(d["measure"]),
                data=points,
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed chart description: {exc}") from exc


@dataclass(frozen=True)
class Column:
    name: str
    type: str  # integer | real | text | date


@dataclass(frozen=True)
class ResultTable:
    """Tabular query result; rows are tuples matching ``columns`` arity."""

    columns: tuple[Column, ...]
    rows: tuple[tuple[Any, ...], ...]
    truncated: bool = False

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row arity {len(row)} != column count {len(self.columns)}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "columns": [{"name": c.name, "type": c.type} for c in self.columns],
            "rows": [list(r) for r in self.rows],
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ResultTable:
        return cls(
            columns=tuple(Column(c["name"], c["type"]) for c in d["columns"]),
            rows=tuple(tuple(r) for r in d["rows"]),
            truncated=bool(d.get("truncated", False)),
        )


@dataclass(frozen=True)
class PlanStep:
    index: int  # 1-based
    description: str
    agent_role: str
    output_kind: str  # chart | table | text

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "description": self.description,
            "agent_role": self.agent_role,
            "output_kind": self.output_kind,
        }


@dataclass(frozen=True)
class TaskPlan:
    goal: str
    steps: tuple[PlanStep, ...]

    def __post_init__(self) -> None:
        indices = [s.index for s in self.steps]
        if indices != list(range(1, len(indices) + 1)):
            raise ValueError(f"step indices must be 1..n contiguous, got {indices}")
        for s in self.steps:
            if s.output_kind not in OUTPUT_KINDS:
                raise ValueError(f"unknown output_kind {s.output_kind!r}")
            if not s.agent_role:
                raise ValueError("agent_role must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"goal": self.goal, "steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TaskPlan:
        steps = tuple(
            PlanStep(
                index=int(s["index"]),
                description=str(s["description"]),
                agent_role=str(s["agent_role"]),
                output_kind=str(s["output_kind"]),
            )
            for s in d["steps"]
        )
        return cls(goal=str(d.get("goal", "")), steps=steps)


@dataclass(frozen=True)
class Value:
    """Tagged union of everything a workflow node or agent step can produce.

    ``kind`` is one of text, table, chart, plan, list, stream, error; the
    payload type depends on the kind.  Stream values carry their chunks as a
    materialized tuple once execution has finished; during execution streams
    flow lazily inside the engine.
    """

    kind: str
    payload: Any = None

    @classmethod
    def text(cls, s: str) -> Value:
        return cls("text", s)

    @classmethod
    def table(cls, t: ResultTable) -> Value:
        return cls("table", t)

    @classmethod
    def chart(cls, c: ChartSpec) -> Value:
        return cls("chart", c)

    @classmethod
    def plan(cls, p: TaskPlan) -> Value:
        return cls("plan", p)

    @classmethod
    def list_of(cls, items: list[Value] | tuple[Value, ...]) -> Value:
        return cls("list", tuple(items))

    @classmethod
    def stream(cls, chunks: list[Value] | tuple[Value, ...]) -> Value:
        return cls("stream", tuple(chunks))

    @classmethod
    def error(cls, message: str) -> Value:
        return cls("error", message)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "text":
            return {"kind": "text", "text": self.payload}
        if self.kind == "error":
            return {"kind": "error", "message": self.payload}
        if self.kind == "chart":
            return {"kind": "chart", "chart": self.payload.to_dict()}
        if self.kind == "table":
            return {"kind": "table", "table": self.payload.to_dict()}
        if self.kind == "plan":
            return {"kind": "plan", "plan": self.payload.to_dict()}
        if self.kind == "list":
            return {"kind": "list", "items": [v.to_dict() for v in self.payload]}
        if self.kind == "stream":
            return {"kind": "stream", "chunks": [v.to_dict() for v in self.payload]}
        raise ValueError(f"unknown value kind {self.kind!r}")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Value:
        kind = d["kind"]
        if kind == "text":
            return cls.text(d["text"])
        if kind == "error":
            return cls.error(d["message"])
        if kind == "chart":
            return cls.chart(ChartSpec.from_dict(d["chart"]))
        if kind == "table":
            return cls.table(ResultTable.from_dict(d["table"]))
        if kind == "plan":
            return cls.plan(TaskPlan.from_dict(d["plan"]))
        if kind == "list":
            return cls.list_of([cls.from_dict(v) for v in d["items"]])
        if kind == "stream":
            return cls.stream([cls.from_dict(v) for v in d["chunks"]])
        raise ValueError(f"unknown value kind {kind!r}")

    def as_text(self) -> str:
        """Coerce to a string: text payloads verbatim, anything else canonical JSON."""
        if self.kind == "text":
            return self.payload
        if self.kind == "error":
            return self.payload
        return canonical_json(self.to_dict())
