"""DAG execution: batch runs, streaming runs, branch gating, failure policy.

Execution walks the deterministic topological order.  Stream operators pass
chunk sequences along stream edges; a stream crossing into a batch-only
operator is implicitly collected into a list value.  A failed node aborts
everything downstream of it while completed results are still reported.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Any, Iterator

from ..errors import DbChatError
from ..values import Value
from .model import DagSpec, Edge, ExecutionReport, OperatorSpec
from .validation import topo_order, validate

STREAM_KINDS = ("stream_source", "stream_transform")


class InvalidDagError(DbChatError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid dag: " + "; ".join(v.message for v in self.violations)
        )


class MissingInputError(DbChatError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"no input value supplied for input node {node_id!r}")


class NodeExecutionError(DbChatError):
    """Raised by node implementations; recorded as a failure in the report."""


class _Stream:
    """Chunk sequence flowing along a stream edge (materialized list)."""

    __slots__ = ("chunks",)

    def __init__(self, chunks: list[Value]):
        self.chunks = chunks


_OK, _FAILED, _ABORTED, _SKIPPED = "ok", "failed", "aborted", "skipped"


def _collect(value: Value | _Stream) -> Value:
    """Implicit stream->batch boundary: a stream becomes a list value."""
    if isinstance(value, _Stream):
        return Value.list_of(value.chunks)
    return value


def _flatten_texts(value: Value) -> list[str]:
    if value.kind == "list":
        return [t for item in value.payload for t in _flatten_texts(item)]
    return [value.as_text()]


def _apply_fn(fn: str, value: Value, sep: str = "") -> Value:
    if fn == "identity":
        return value
    if fn in ("upper", "lower"):
        transform = str.upper if fn == "upper" else str.lower
        if value.kind == "text":
            return Value.text(transform(value.payload))
        if value.kind == "list":
            return Value.list_of([_apply_fn(fn, item) for item in value.payload])
        raise NodeExecutionError(f"{fn} expects text input, got {value.kind}")
    if fn == "concat":
        return Value.text(sep.join(_flatten_texts(value)))
    raise NodeExecutionError(f"unknown map function {fn!r}")


def _match_branch(text: str, out_edges: list[Edge]) -> Edge | None:
    """Label semantics: exact equality, then contains:<substr>, then default."""
    for e in out_edges:
        if e.when is None or e.when == "default" or e.when.startswith("contains:"):
            continue
        if e.when == text:
            return e
    for e in out_edges:
        if e.when and e.when.startswith("contains:"):
            if e.when[len("contains:"):] in text:
                return e
    for e in out_edges:
        if e.when == "default":
            return e
    return None


class StreamRun:
    """Iterable of (node-id, chunk value) emissions; ``report`` is populated
    once the iterator is exhausted."""

    def __init__(self, dag: DagSpec, inputs: dict[str, Value], ctx: Any, mode: str):
        violations = validate(dag)
        if violations:
            raise InvalidDagError(violations)
        self._dag = dag
        self._inputs = inputs
        self._ctx = ctx
        self._mode = mode
        self.report: ExecutionReport | None = None
        self._gen = self._drive()

    def __iter__(self) -> Iterator[tuple[str, Value]]:
        return self._gen

    def _drive(self) -> Iterator[tuple[str, Value]]:
        dag = self._dag
        nodes = dag.node_map()
        incoming: dict[str, list[Edge]] = defaultdict(list)
        outgoing: dict[str, list[Edge]] = defaultdict(list)
        for e in dag.edges:
            incoming[e.dst].append(e)
            outgoing[e.src].append(e)
        # A stream node emits chunks outward only if no stream node consumes it.
        is_emitter = {
            n.id: n.kind in STREAM_KINDS
            and not any(nodes[e.dst].kind in STREAM_KINDS for e in outgoing[n.id])
            for n in dag.nodes
        }

        for node in dag.nodes:
            if node.kind == "input" and node.id not in self._inputs:
                raise MissingInputError(node.id)

        state: dict[str, str] = {}
        results: dict[str, Value | _Stream] = {}
        edge_inactive: set[int] = set()  # id() of branch-gated Edge objects
        executed: list[str] = []
        failures: dict[str, str] = {}

        for node_id in topo_order(dag):
            node = nodes[node_id]
            in_edges = incoming[node_id]
            if any(state.get(e.src) in (_FAILED, _ABORTED) for e in in_edges):
                state[node_id] = _ABORTED
                continue
            live = [
                e for e in in_edges
                if state.get(e.src) == _OK and id(e) not in edge_inactive
            ]
            if in_edges and not live:
                state[node_id] = _SKIPPED
                continue
            upstream = {e.src: results[e.src] for e in live}
            try:
                if node.kind in STREAM_KINDS:
                    result = yield from self._run_stream_node(
                        node, upstream, is_emitter[node_id]
                    )
                else:
                    result = self._run_batch_node(
                        node, upstream, outgoing[node_id], edge_inactive
                    )
            except (DbChatError, ValueError, KeyError, TypeError) as exc:
                state[node_id] = _FAILED
                failures[node_id] = f"{type(exc).__name__}: {exc}"
                executed.append(node_id)
                continue
            state[node_id] = _OK
            results[node_id] = result
            executed.append(node_id)

        self.report = ExecutionReport(
            dag_name=dag.name,
            node_results={
                nid: (Value.stream(v.chunks) if isinstance(v, _Stream) else v)
                for nid, v in results.items()
            },
            order=executed,
            mode=self._mode,
            failures=failures,
        )

    def _run_batch_node(
        self,
        node: OperatorSpec,
        upstream: dict[str, Value | _Stream],
        out_edges: list[Edge],
        edge_inactive: set[int],
    ) -> Value:
        collected = {src: _collect(v) for src, v in sorted(upstream.items())}
        values = list(collected.values())
        kind = node.kind
        if kind == "input":
            return self._inputs[node.id]
        if kind == "output":
            if not values:
                raise NodeExecutionError(f"output node {node.id!r} has no upstream")
            return values[0] if len(values) == 1 else Value.list_of(values)
        if kind == "map":
            if not values:
                raise NodeExecutionError(f"map node {node.id!r} has no upstream")
            operand = values[0] if len(values) == 1 else Value.list_of(values)
            fn = str(node.config.get("fn", "identity"))
            return _apply_fn(fn, operand, str(node.config.get("sep", "")))
        if kind == "join":
            return Value.list_of(values)
        if kind == "branch":
            if len(values) != 1:
                raise NodeExecutionError(
                    f"branch node {node.id!r} needs exactly one live upstream"
                )
            text = values[0].as_text()
            chosen = _match_branch(text, out_edges)
            if chosen is None:
                raise NodeExecutionError(
                    f"branch node {node.id!r}: no when label matches {text!r}"
                )
            for e in out_edges:
                if e is not chosen:
                    edge_inactive.add(id(e))
            return values[0]
        if kind == "agent":
            return self._run_agent(node, collected)
        raise NodeExecutionError(f"unknown operator kind {kind!r}")

    def _run_stream_node(
        self,
        node: OperatorSpec,
        upstream: dict[str, Value | _Stream],
        emit: bool,
    ) -> Iterator[tuple[str, Value]]:
        fn = str(node.config.get("fn", "identity"))
        sep = str(node.config.get("sep", ""))
        if node.kind == "stream_source":
            chunks = self._source_chunks(upstream)
            transform = None
        else:
            streams = [v for v in upstream.values() if isinstance(v, _Stream)]
            if len(streams) != 1:
                raise NodeExecutionError(
                    f"stream_transform {node.id!r} requires exactly one stream upstream"
                )
            chunks = streams[0].chunks
            transform = fn
        out: list[Value] = []
        for chunk in chunks:
            piece = chunk if transform is None else _apply_fn(transform, chunk, sep)
            out.append(piece)
            if emit:
                yield (node.id, piece)
        return _Stream(out)

    @staticmethod
    def _source_chunks(upstream: dict[str, Value | _Stream]) -> list[Value]:
        values = [v for _, v in sorted(upstream.items())]
        if not values:
            return []
        v = values[0]
        if isinstance(v, _Stream):
            return list(v.chunks)
        if v.kind in ("list", "stream"):
            return list(v.payload)
        return [v]

    def _run_agent(self, node: OperatorSpec, upstream: dict[str, Value]) -> Value:
        if self._ctx is None:
            raise NodeExecutionError(f"agent node {node.id!r} requires an agent runtime")
        from .. import agents

        step = agents.PlanStep(
            index=1,
            description=str(node.config.get("description", "")),
            agent_role=str(node.config["role"]),
            output_kind=str(node.config.get("output_kind", "text")),
        )
        return agents.dispatch(step, upstream, self._ctx)


def execute(dag: DagSpec, inputs: dict[str, Value], ctx: Any = None) -> ExecutionReport:
    """Run the whole DAG in batch mode and return its report.

    Raises :class:`InvalidDagError` when validation fails and
    :class:`MissingInputError` when an input node has no supplied value.
    Node failures are recorded in ``report.failures``; everything downstream
    of a failed node is left unexecuted.
    """
    run = StreamRun(dag, inputs, ctx, mode="batch")
    for _ in run:
        pass
    assert run.report is not None
    return run.report


def execute_stream(dag: DagSpec, inputs: dict[str, Value], ctx: Any = None) -> StreamRun:
    """Run in streaming mode: iterate the result for (node-id, chunk) pairs
    emitted by terminal stream operators; ``run.report`` is available after
    exhaustion."""
    return StreamRun(dag, inputs, ctx, mode="stream")
