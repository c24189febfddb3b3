from __future__ import annotations

import random

import pytest

from dbchat.awel import (
    DagSpec,
    Edge,
    InvalidDagError,
    MissingInputError,
    OperatorSpec,
    execute,
    execute_stream,
    parse_dag_dsl,
)
from dbchat.values import Value


def dag_of(source: str) -> DagSpec:
    return parse_dag_dsl(source)


def test_single_map_upper():
    dag = dag_of('dag "t" { node i: input() node n: map(fn="upper") i -> n }')
    report = execute(dag, {"i": Value.text("ab")})
    assert report.node_results["n"] == Value.text("AB")
    assert report.order == ["i", "n"]
    assert report.failures == {}


def test_missing_input_raises():
    dag = dag_of('dag "t" { node i: input() }')
    with pytest.raises(MissingInputError):
        execute(dag, {})


def test_invalid_dag_rejected():
    dag = DagSpec(
        name="cyc",
        nodes=[OperatorSpec(id="a", kind="map"), OperatorSpec(id="b", kind="map")],
        edges=[Edge("a", "b"), Edge("b", "a")],
    )
    with pytest.raises(InvalidDagError):
        execute(dag, {})


def test_branch_activates_single_leaf():
    dag = dag_of(
        'dag "b" {\n'
        "  node i: input()\n"
        "  node br: branch()\n"
        '  node good: map(fn="upper")\n'
        '  node bad: map(fn="lower")\n'
        "  i -> br\n"
        '  br -> good [when="ok"]\n'
        '  br -> bad [when="err"]\n'
        "}"
    )
    report = execute(dag, {"i": Value.text("ok")})
    assert "good" in report.order
    assert "bad" not in report.order
    assert report.node_results["good"] == Value.text("OK")


def test_branch_contains_and_default_labels():
    dag = dag_of(
        'dag "b" { node i: input() node br: branch() node x: output() node y: output() node z: output()\n'
        "i -> br\n"
        'br -> x [when="contains:err"]\n'
        'br -> y [when="exact"]\n'
        'br -> z [when="default"]\n'
        "}"
    )
    assert "y" in execute(dag, {"i": Value.text("exact")}).order
    assert "x" in execute(dag, {"i": Value.text("an error here")}).order
    assert "z" in execute(dag, {"i": Value.text("nothing matches")}).order


def test_branch_no_match_is_node_failure():
    dag = dag_of(
        'dag "b" { node i: input() node br: branch() node x: output() node y: output()\n'
        'i -> br\nbr -> x [when="a"]\nbr -> y [when="b"]\n}'
    )
    report = execute(dag, {"i": Value.text("zzz")})
    assert "br" in report.failures
    assert "x" not in report.order and "y" not in report.order


def test_join_orders_upstreams_by_id():
    dag = dag_of(
        'dag "j" { node i: input() node b: map(fn="upper") node a: map(fn="lower") node j: join()\n'
        "i -> a\ni -> b\na -> j\nb -> j\n}"
    )
    report = execute(dag, {"i": Value.text("Xy")})
    assert report.node_results["j"] == Value.list_of([Value.text("xy"), Value.text("XY")])


def test_map_concat_multiple_upstreams():
    dag = dag_of(
        'dag "c" { node i: input() node a: map(fn="lower") node b: map(fn="upper") node c: map(fn="concat", sep="-")\n'
        "i -> a\ni -> b\na -> c\nb -> c\n}"
    )
    report = execute(dag, {"i": Value.text("Ab")})
    assert report.node_results["c"] == Value.text("ab-AB")


def test_node_failure_aborts_downstream_keeps_completed():
    dag = dag_of(
        'dag "f" { node i: input() node ok: map(fn="upper") node boom: map(fn="nosuch") node after: map()\n'
        "i -> ok\ni -> boom\nboom -> after\n}"
    )
    report = execute(dag, {"i": Value.text("x")})
    assert report.node_results["ok"] == Value.text("X")
    assert "boom" in report.failures
    assert "after" not in report.order
    assert "boom" in report.order


def test_order_respects_edges():
    dag = dag_of(
        'dag "d" { node i: input() node b: map() node a: map() node z: join()\n'
        "i -> b\ni -> a\nb -> z\na -> z\n}"
    )
    report = execute(dag, {"i": Value.text("v")})
    pos = {n: k for k, n in enumerate(report.order)}
    for e in dag.edges:
        assert pos[e.src] < pos[e.dst]


def test_stream_two_chunks_upper():
    dag = dag_of(
        'dag "s" { node i: input() node src: stream_source() node t: stream_transform(fn="upper")\n'
        "i -> src\nsrc -> t\n}"
    )
    run = execute_stream(dag, {"i": Value.list_of([Value.text("a"), Value.text("b")])})
    emissions = list(run)
    assert emissions == [("t", Value.text("A")), ("t", Value.text("B"))]
    assert run.report is not None
    assert run.report.node_results["t"] == Value.stream([Value.text("A"), Value.text("B")])


def test_stream_into_batch_map_collects_list_of_five():
    dag = dag_of(
        'dag "s" { node i: input() node src: stream_source() node m: map(fn="identity")\n'
        "i -> src\nsrc -> m\n}"
    )
    chunks = [Value.text(c) for c in "abcde"]
    report = execute(dag, {"i": Value.list_of(chunks)})
    result = report.node_results["m"]
    assert result.kind == "list"
    assert len(result.payload) == 5


def test_empty_stream_zero_emissions_report_produced():
    dag = dag_of(
        'dag "s" { node i: input() node src: stream_source() node t: stream_transform()\n'
        "i -> src\nsrc -> t\n}"
    )
    run = execute_stream(dag, {"i": Value.list_of([])})
    assert list(run) == []
    assert run.report is not None
    assert run.report.node_results["t"] == Value.stream([])
    assert run.report.order == ["i", "src", "t"]


def _random_stream_pipeline(rng: random.Random):
    """input -> stream_source -> 1..3 transforms (upper/lower/identity chain)."""
    depth = rng.randint(1, 3)
    fns = [rng.choice(["upper", "lower", "identity"]) for _ in range(depth)]
    lines = ['dag "p" {', "  node i: input()", "  node s0: stream_source()"]
    for k, fn in enumerate(fns):
        lines.append(f'  node t{k}: stream_transform(fn="{fn}")')
    lines.append("  i -> s0")
    prev = "s0"
    for k in range(depth):
        lines.append(f"  {prev} -> t{k}")
        prev = f"t{k}"
    lines.append("}")
    chunk_count = rng.randint(0, 6)
    alphabet = "abcXYZ 09"
    chunks = [
        "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 5)))
        for _ in range(chunk_count)
    ]
    return parse_dag_dsl("\n".join(lines)), chunks


def concat_stream_result(value: Value) -> str:
    assert value.kind == "stream"
    return "".join(chunk.payload for chunk in value.payload)


@pytest.mark.parametrize("seed", range(20))
def test_stream_batch_equivalence(seed):
    rng = random.Random(seed)
    dag, chunks = _random_stream_pipeline(rng)
    streamed = execute_stream(dag, {"i": Value.list_of([Value.text(c) for c in chunks])})
    list(streamed)
    batch = execute(dag, {"i": Value.text("".join(chunks))})
    for node in dag.nodes:
        if node.kind not in ("stream_source", "stream_transform"):
            continue
        s = concat_stream_result(streamed.report.node_results[node.id])
        b = concat_stream_result(batch.node_results[node.id])
        assert s == b, f"node {node.id} stream={s!r} batch={b!r}"


def test_determinism_identical_runs():
    dag = dag_of(
        'dag "d" { node i: input() node a: map(fn="upper") node b: map(fn="lower") node j: join()\n'
        "i -> a\ni -> b\na -> j\nb -> j\n}"
    )
    r1 = execute(dag, {"i": Value.text("MiXeD")})
    r2 = execute(dag, {"i": Value.text("MiXeD")})
    assert r1.node_results == r2.node_results
    assert r1.order == r2.order
