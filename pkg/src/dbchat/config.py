"""Process configuration: one JSON file, validated with precise messages.

The ``DBCHAT_CONFIG`` environment variable overrides the ``--config`` flag.
Numeric fields are checked against the ranges their consuming modules
declare, and JSON syntax errors are reported with line and column.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import DbChatError

ENV_VAR = "DBCHAT_CONFIG"


class ConfigError(DbChatError):
    pass


@dataclass(frozen=True)
class ModelDefaults:
    model: str = "mock-1"
    temperature: float = 0.0
    max_tokens: int = 4096


@dataclass(frozen=True)
class WorkerConfig:
    model: str
    endpoint: str
    script_path: str | None = None


@dataclass(frozen=True)
class KnowledgeDefaults:
    d: int = 256
    max_chars: int = 512
    k: int = 4


@dataclass(frozen=True)
class Config:
    listen_addr: str = "127.0.0.1:8000"
    data_dir: str = "./dbchat-data"
    model: ModelDefaults = field(default_factory=ModelDefaults)
    workers: tuple[WorkerConfig, ...] = ()
    knowledge: KnowledgeDefaults = field(default_factory=KnowledgeDefaults)
    api_key: str | None = None
    knowledge_space: str = "default"
    chart_via_sql: bool = False
    database: str | None = None
    seed_demo_data: bool = False

    @property
    def host(self) -> str:
        return self.listen_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_addr.rsplit(":", 1)[1])


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{path}: {message}")


def parse_config(doc: dict[str, Any], path: str = "<config>") -> Config:
    _require(isinstance(doc, dict), path, "top level must be a JSON object")
    model_doc = doc.get("model", {})
    model = ModelDefaults(
        model=str(model_doc.get("model", "mock-1")),
        temperature=float(model_doc.get("temperature", 0.0)),
        max_tokens=int(model_doc.get("max_tokens", 4096)),
    )
    _require(0.0 <= model.temperature <= 2.0, path, "model.temperature must be within [0, 2]")
    _require(model.max_tokens >= 1, path, "model.max_tokens must be positive")

    workers = []
    for i, w in enumerate(doc.get("workers", [])):
        _require(isinstance(w, dict), path, f"workers[{i}] must be an object")
        endpoint = str(w.get("endpoint", ""))
        _require(bool(endpoint.strip()), path, f"workers[{i}].endpoint must be non-empty")
        _require(bool(str(w.get("model", "")).strip()), path, f"workers[{i}].model must be non-empty")
        workers.append(
            WorkerConfig(
                model=str(w["model"]),
                endpoint=endpoint,
                script_path=w.get("script_path"),
            )
        )

    knowledge_doc = doc.get("knowledge", {})
    knowledge = KnowledgeDefaults(
        d=int(knowledge_doc.get("d", 256)),
        max_chars=int(knowledge_doc.get("max_chars", 512)),
        k=int(knowledge_doc.get("k", 4)),
    )
    _require(knowledge.d >= 8, path, "knowledge.d must be >= 8")
    _require(knowledge.max_chars >= 64, path, "knowledge.max_chars must be >= 64")
    _require(knowledge.k >= 1, path, "knowledge.k must be >= 1")

    listen_addr = str(doc.get("listen_addr", "127.0.0.1:8000"))
    _require(":" in listen_addr, path, "listen_addr must be host:port")
    port_text = listen_addr.rsplit(":", 1)[1]
    _require(port_text.isdigit() and 1 <= int(port_text) <= 65535, path,
             f"listen_addr port {port_text!r} must be an integer in 1..65535")

    api_key = doc.get("api_key")
    return Config(
        listen_addr=listen_addr,
        data_dir=str(doc.get("data_dir", "./dbchat-data")),
        model=model,
        workers=tuple(workers),
        knowledge=knowledge,
        api_key=str(api_key) if api_key else None,
        knowledge_space=str(doc.get("knowledge_space", "default")),
        chart_via_sql=bool(doc.get("chart_via_sql", False)),
        database=doc.get("database"),
        seed_demo_data=bool(doc.get("seed_demo_data", False)),
    )


def load_config(flag_path: str | None) -> Config:
    """Resolve the config path (env var wins over the flag) and parse it."""
    path = os.environ.get(ENV_VAR) or flag_path
    if path is None:
        raise ConfigError("no config file: pass --config or set " + ENV_VAR)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(doc, path=str(path))
