"""Structural validation and deterministic topological ordering."""

from __future__ import annotations

import heapq
from collections import defaultdict

from ..errors import DbChatError
from .model import NODE_ID_RE, OPERATOR_KINDS, DagSpec, Violation


class CyclicGraphError(DbChatError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("graph contains a cycle: " + " -> ".join(cycle))


def _find_cycle(dag: DagSpec) -> list[str] | None:
    """Iterative DFS; returns one cycle as a node-id list, or None."""
    adj: dict[str, list[str]] = defaultdict(list)
    ids = [n.id for n in dag.nodes]
    known = set(ids)
    for e in dag.edges:
        if e.src in known and e.dst in known:
            adj[e.src].append(e.dst)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {i: WHITE for i in ids}
    parent: dict[str, str] = {}
    for root in ids:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        color[root] = GRAY
        while stack:
            node, idx = stack[-1]
            if idx < len(adj[node]):
                stack[-1] = (node, idx + 1)
                nxt = adj[node][idx]
                if color[nxt] == GRAY:
                    cycle = [nxt]
                    cur = node
                    while cur != nxt:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.reverse()
                    return cycle
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    parent[nxt] = node
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return None


def validate(dag: DagSpec) -> list[Violation]:
    """Check every DagSpec invariant; an empty list means the DAG is sound.

    Violations are returned as data so callers (HTTP 422 bodies, the CLI)
    can report all of them at once.  A cycle violation names one offending
    cycle in its ``nodes`` field.
    """
    violations: list[Violation] = []
    seen: set[str] = set()
    for node in dag.nodes:
        if node.id in seen:
            violations.append(
                Violation("duplicate-node-id", f"duplicate node id {node.id!r}", (node.id,))
            )
        seen.add(node.id)
        if not NODE_ID_RE.match(node.id):
            violations.append(
                Violation("bad-node-id", f"node id {node.id!r} must match [a-z][a-z0-9_]*", (node.id,))
            )
        if node.kind not in OPERATOR_KINDS:
            violations.append(
                Violation("bad-kind", f"node {node.id!r} has unknown kind {node.kind!r}", (node.id,))
            )
        if node.kind == "agent" and not str(node.config.get("role", "")).strip():
            violations.append(
                Violation("missing-role", f"agent node {node.id!r} requires config key 'role'", (node.id,))
            )

    edge_keys: set[tuple[str, str, str | None]] = set()
    for e in dag.edges:
        for endpoint in (e.src, e.dst):
            if endpoint not in seen:
                violations.append(
                    Violation("unknown-node", f"edge references unknown node {endpoint!r}", (endpoint,))
                )
        key = (e.src, e.dst, e.when)
        if key in edge_keys:
            violations.append(
                Violation(
                    "duplicate-edge",
                    f"duplicate edge {e.src} -> {e.dst}" + (f" [when={e.when!r}]" if e.when else ""),
                    (e.src, e.dst),
                )
            )
        edge_keys.add(key)

    outgoing: dict[str, list[str | None]] = defaultdict(list)
    for e in dag.edges:
        outgoing[e.src].append(e.when)
    for node in dag.nodes:
        if node.kind != "branch":
            continue
        labels = outgoing.get(node.id, [])
        if len(labels) < 2:
            violations.append(
                Violation("branch-fanout", f"branch node {node.id!r} requires >= 2 outgoing edges", (node.id,))
            )
        if None in labels:
            violations.append(
                Violation("branch-label", f"every outgoing edge of branch {node.id!r} needs a when label", (node.id,))
            )
        concrete = [l for l in labels if l is not None]
        if len(set(concrete)) != len(concrete):
            violations.append(
                Violation("branch-label", f"branch {node.id!r} has duplicate when labels", (node.id,))
            )

    cycle = _find_cycle(dag)
    if cycle is not None:
        violations.append(
            Violation("cycle", "cycle: " + " -> ".join(cycle), tuple(cycle))
        )

    # Every node must be reachable from some in-degree-0 node.
    indeg: dict[str, int] = {n.id: 0 for n in dag.nodes}
    adj: dict[str, list[str]] = defaultdict(list)
    for e in dag.edges:
        if e.src in indeg and e.dst in indeg:
            indeg[e.dst] += 1
            adj[e.src].append(e.dst)
    reachable = set()
    frontier = [i for i, d in indeg.items() if d == 0]
    while frontier:
        cur = frontier.pop()
        if cur in reachable:
            continue
        reachable.add(cur)
        frontier.extend(adj[cur])
    for node in dag.nodes:
        if node.id not in reachable:
            violations.append(
                Violation("unreachable", f"node {node.id!r} is not reachable from any source node", (node.id,))
            )
    return violations


def topo_order(dag: DagSpec) -> list[str]:
    """Kahn's algorithm; ties among ready nodes broken by ascending node id."""
    indeg: dict[str, int] = {n.id: 0 for n in dag.nodes}
    adj: dict[str, list[str]] = defaultdict(list)
    for e in dag.edges:
        indeg[e.dst] += 1
        adj[e.src].append(e.dst)
    ready = [i for i, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        cur = heapq.heappop(ready)
        order.append(cur)
        for nxt in adj[cur]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(dag.nodes):
        cycle = _find_cycle(dag)
        raise CyclicGraphError(cycle or [i for i, d in indeg.items() if d > 0])
    return order


def topo_levels(dag: DagSpec) -> list[list[str]]:
    """Kahn layers: nodes grouped by longest-path depth, ids sorted per layer."""
    indeg: dict[str, int] = {n.id: 0 for n in dag.nodes}
    adj: dict[str, list[str]] = defaultdict(list)
    for e in dag.edges:
        indeg[e.dst] += 1
        adj[e.src].append(e.dst)
    level = [sorted(i for i, d in indeg.items() if d == 0)]
    levels: list[list[str]] = []
    seen = 0
    while level and level[0]:
        current = level.pop()
        levels.append(current)
        seen += len(current)
        nxt: list[str] = []
        for node in current:
            for succ in adj[node]:
                indeg[succ] -= 1
                if indeg[succ] == 0:
                    nxt.append(succ)
        if nxt:
            level = [sorted(nxt)]
    if seen != len(dag.nodes):
        raise CyclicGraphError(_find_cycle(dag) or [])
    return levels
