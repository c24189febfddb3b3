"""Operator entry points: serve the HTTP API, ingest documents, run
workflows from DSL files, and a terminal chat REPL.

Exit codes: 0 success, 1 runtime error, 2 usage or validation error.
``run-dag`` writes the execution report as JSON to stdout with all logs on
stderr, so it composes in shell pipelines.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import agents, awel, datachat
from .agents import AgentRuntime, demo_profiles
from .config import Config, ConfigError, load_config
from .errors import DbChatError
from .rag.knowledge import KnowledgeSpaces
from .smmf import Gateway
from .store import EventStore
from .values import ChartSpec, Value

EXIT_RUNTIME_ERROR = 1
EXIT_VALIDATION_ERROR = 2

CHART_BAR_WIDTH = 24


def build_runtime(config: Config) -> tuple[AgentRuntime, KnowledgeSpaces]:
    """Boot the module layer from a config: store, gateway with configured
    workers, knowledge spaces, and (optionally) the demo database."""
    gateway = Gateway()
    for worker in config.workers:
        script = None
        if worker.script_path:
            script = json.loads(Path(worker.script_path).read_text(encoding="utf-8"))
        gateway.add_worker(worker.model, worker.endpoint, script=script)
    store = EventStore(config.data_dir)
    database = None
    if config.database:
        db_path = Path(config.database)
        fresh = not db_path.exists()
        db_path.parent.mkdir(parents=True, exist_ok=True)
        database = datachat.connect(str(db_path))
        if fresh and config.seed_demo_data:
            datachat.build_demo_database(database)
    runtime = AgentRuntime(
        profiles=demo_profiles(),
        gateway=gateway,
        store=store,
        model=config.model.model,
        temperature=config.model.temperature,
        max_tokens=config.model.max_tokens,
        database=database,
        chart_via_sql=config.chart_via_sql,
    )
    spaces = KnowledgeSpaces(
        Path(config.data_dir) / "knowledge", max_chars=config.knowledge.max_chars
    )
    return runtime, spaces


def render_chart_text(spec: ChartSpec) -> str:
    """Aligned label | bar | value rows for terminal display."""
    label_width = max(len(p.label) for p in spec.data) if spec.data else 0
    peak = max((abs(p.value) for p in spec.data), default=0.0) or 1.0
    lines = [f"[chart] {spec.title} ({spec.chart_type})"]
    for p in spec.data:
        bar = "#" * max(1, round(CHART_BAR_WIDTH * abs(p.value) / peak)) if p.value else ""
        lines.append(f"  {p.label.ljust(label_width)} | {bar} {p.value:g}")
    return "\n".join(lines)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Natural-language data interaction: agents, workflows, SQL, retrieval."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config JSON file.")
def serve(config_path: str | None) -> None:
    """Boot the store, model gateway, knowledge spaces, and HTTP API."""
    import uvicorn

    from .server import create_app

    try:
        config = load_config(config_path)
        runtime, spaces = build_runtime(config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc), EXIT_VALIDATION_ERROR)
    frontend = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    app = create_app(
        runtime, spaces, api_key=config.api_key,
        frontend_dir=frontend if frontend.is_dir() else None,
    )
    click.echo(f"dbchat ready on http://{config.host}:{config.port}", err=True)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command()
@click.option("--space", required=True, help="Knowledge space name.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.argument("files", nargs=-1, required=True, type=click.Path())
def ingest(space: str, config_path: str | None, files: tuple[str, ...]) -> None:
    """Segment, encode, and index documents; prints per-file chunk counts."""
    try:
        config = load_config(config_path) if (config_path or _env_config()) else Config()
    except ConfigError as exc:
        _fail(str(exc), EXIT_VALIDATION_ERROR)
    spaces = KnowledgeSpaces(
        Path(config.data_dir) / "knowledge", max_chars=config.knowledge.max_chars
    )
    total = 0
    for name in files:
        path = Path(name)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            _fail(str(exc), EXIT_RUNTIME_ERROR)
        count = spaces.ingest(space, path.stem, text)
        total += count
        click.echo(f"{name}: {count} chunks")
    click.echo(f"total: {total} chunks")


def _env_config() -> str | None:
    import os

    from .config import ENV_VAR

    return os.environ.get(ENV_VAR)


def _parse_inputs(pairs: tuple[str, ...]) -> dict[str, Value]:
    inputs: dict[str, Value] = {}
    for pair in pairs:
        if "=" not in pair:
            _fail(f"--input expects key=value, got {pair!r}", EXIT_VALIDATION_ERROR)
        key, _, value = pair.partition("=")
        inputs[key] = Value.text(value)
    return inputs


@main.command("run-dag")
@click.option("--file", "dsl_file", required=True, type=click.Path())
@click.option("--input", "inputs", multiple=True, help="Input value as node_id=text.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def run_dag(dsl_file: str, inputs: tuple[str, ...], config_path: str | None) -> None:
    """Parse, validate, and execute a workflow; report JSON goes to stdout."""
    try:
        source = Path(dsl_file).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(str(exc), EXIT_RUNTIME_ERROR)
    try:
        dag = awel.parse_dag_dsl(source)
    except DbChatError as exc:
        _fail(f"parse: {exc}", EXIT_VALIDATION_ERROR)
    violations = awel.validate(dag)
    if violations:
        for violation in violations:
            click.echo(f"violation: {violation.message}", err=True)
        sys.exit(EXIT_VALIDATION_ERROR)
    try:
        config = load_config(config_path) if (config_path or _env_config()) else _demo_config()
        runtime, _ = build_runtime(config)
        runtime.conversation_id = runtime.store.create_conversation()
        report = awel.execute(dag, _parse_inputs(inputs), runtime)
    except (ConfigError,) as exc:
        _fail(str(exc), EXIT_VALIDATION_ERROR)
    except DbChatError as exc:
        _fail(str(exc), EXIT_RUNTIME_ERROR)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


def _demo_config() -> Config:
    """Offline defaults: one scripted mock worker, local data directory."""
    from .config import ModelDefaults, WorkerConfig

    script_path = Path(__file__).resolve().parent / "demo" / "mock_script.json"
    return Config(
        data_dir="./dbchat-data",
        model=ModelDefaults(),
        workers=(WorkerConfig(model="mock-1", endpoint="internal:mock",
                              script_path=str(script_path)),),
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
def chat(config_path: str | None) -> None:
    """Terminal REPL: type a goal, watch the plan, charts, and summary."""
    try:
        config = load_config(config_path) if (config_path or _env_config()) else _demo_config()
        runtime, _ = build_runtime(config)
    except ConfigError as exc:
        _fail(str(exc), EXIT_VALIDATION_ERROR)
    conversation_id: str | None = None
    while True:
        click.echo("> ", nl=False)
        line = sys.stdin.readline()
        if not line:
            click.echo("\nbye")
            return
        text = line.strip()
        if not text:
            continue
        if text in ("/quit", "/exit"):
            click.echo("bye")
            return
        if conversation_id is None:
            conversation_id = runtime.store.create_conversation()
        runtime.store.append_event(conversation_id, "user_message", {"text": text})
        bound = runtime.for_conversation(conversation_id)
        try:
            for kind, payload in agents.run_goal_events(text, bound):
                if kind == "plan":
                    click.echo("plan:")
                    for step in payload.steps:
                        click.echo(f"  {step.index}. {step.description} [{step.agent_role}]")
                elif kind == "step_start":
                    click.echo(f"... step {payload.index}: {payload.description}")
                elif kind == "step_result":
                    _, value = payload
                    if value.kind == "chart":
                        click.echo(render_chart_text(value.payload))
                    else:
                        click.echo(f"result: {value.as_text()}")
                elif kind == "error":
                    step, value = payload
                    click.echo(f"error in step {step.index}: {value.as_text()}")
                elif kind == "final":
                    _, value = payload
                    click.echo(f"final: {value.as_text()}")
        except DbChatError as exc:
            click.echo(f"error: {exc}", err=True)


if __name__ == "__main__":
    main()
