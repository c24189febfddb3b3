"""Packaged demo fixtures: the scripted mock responses and sales CSVs that
make the whole generative-analysis scenario runnable offline."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

SALES_GOAL = (
    "Build sales reports and analyze user orders from at least three distinct dimensions"
)


def _resource(name: str):
    return resources.files("dbchat").joinpath("demo", name)


def load_mock_script() -> dict[str, Any]:
    """The scripted responses driving the offline sales-report scenario."""
    return json.loads(_resource("mock_script.json").read_text(encoding="utf-8"))


def sales_dsl() -> str:
    """The sales-report workflow in DSL form (planner, three charts, aggregator)."""
    return _resource("sales_report.dsl").read_text(encoding="utf-8")


def csv_path(name: str) -> Path:
    return Path(str(_resource(f"{name}.csv")))
