"""Workflow graph data model: operators, edges, reports, violations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from ..values import Value

OPERATOR_KINDS = (
    "input",
    "output",
    "map",
    "join",
    "branch",
    "agent",
    "stream_source",
    "stream_transform",
)

NODE_ID_RE = re.compile(r"^[a-z][a-z0-9_]*$")

MAP_FUNCTIONS = ("upper", "lower", "identity", "concat")


@dataclass(frozen=True)
class OperatorSpec:
    """One workflow node: an id, an operator kind, and scalar config."""

    id: str
    kind: str
    config: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    when: str | None = None


@dataclass
class DagSpec:
    """A named DAG of operators.  Immutable by convention after validation."""

    name: str
    nodes: list[OperatorSpec]
    edges: list[Edge]

    def node_map(self) -> dict[str, OperatorSpec]:
        return {n.id: n for n in self.nodes}

    def to_json_dict(self) -> dict[str, Any]:
        """Canonical JSON form: nodes sorted by id, edges by (src, dst, when)."""
        return {
            "name": self.name,
            "nodes": [
                {"id": n.id, "kind": n.kind, "config": dict(sorted(n.config.items()))}
                for n in sorted(self.nodes, key=lambda n: n.id)
            ],
            "edges": [
                {"from": e.src, "to": e.dst, "when": e.when}
                for e in sorted(self.edges, key=lambda e: (e.src, e.dst, e.when or ""))
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> DagSpec:
        return cls(
            name=d["name"],
            nodes=[
                OperatorSpec(id=n["id"], kind=n["kind"], config=dict(n.get("config", {})))
                for n in d["nodes"]
            ],
            edges=[Edge(e["from"], e["to"], e.get("when")) for e in d["edges"]],
        )

    def canonical(self) -> DagSpec:
        """Copy with nodes and edges in canonical order (for structural comparisons)."""
        return DagSpec.from_json_dict(self.to_json_dict())


@dataclass(frozen=True)
class Violation:
    """A single invariant violation found by validation (data, not an exception)."""

    code: str
    message: str
    nodes: tuple[str, ...] = ()


@dataclass
class ExecutionReport:
    dag_name: str
    node_results: dict[str, Value]
    order: list[str]
    mode: str  # batch | stream
    failures: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dag_name": self.dag_name,
            "mode": self.mode,
            "order": list(self.order),
            "node_results": {k: v.to_dict() for k, v in self.node_results.items()},
            "failures": dict(self.failures),
        }
