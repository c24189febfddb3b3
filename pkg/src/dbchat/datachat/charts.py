"""Chart selection: turn a two-plus-column result table into a ChartSpec."""

from __future__ import annotations

import math

from ..errors import DbChatError
from ..values import ChartPoint, ChartSpec, DONUT_MAX_CATEGORIES, ResultTable

DONUT_AUTO_MAX_ROWS = 8


class NotChartableError(DbChatError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"not chartable: {reason}")


def _pick_columns(table: ResultTable) -> tuple[int, int]:
    if len(table.columns) < 2:
        raise NotChartableError("need at least a dimension and a measure column")
    dim = next(
        (i for i, c in enumerate(table.columns) if c.type in ("text", "date")), None
    )
    measure = next(
        (i for i, c in enumerate(table.columns) if c.type in ("integer", "real")), None
    )
    if dim is None:
        raise NotChartableError("no text or date column to use as dimension")
    if measure is None:
        raise NotChartableError("no numeric column to use as measure")
    return dim, measure


def _hint_valid(hint: str, dimension_type: str, points: list[ChartPoint]) -> bool:
    if hint in ("bar", "table"):
        return True
    if hint == "donut":
        return len(points) <= DONUT_MAX_CATEGORIES and all(p.value >= 0 for p in points)
    if hint in ("area", "line"):
        return dimension_type == "date"
    return False


def rows_to_chart(table: ResultTable, hint: str | None = None) -> ChartSpec:
    """Deterministic chart choice: honor a valid hint, otherwise a date
    dimension becomes an area chart, a small non-negative categorical one a
    donut, and anything else a bar chart.  Data preserves table row order."""
    if not table.rows:
        raise NotChartableError("table has no rows")
    dim_idx, measure_idx = _pick_columns(table)
    dim_col = table.columns[dim_idx]
    measure_col = table.columns[measure_idx]
    points: list[ChartPoint] = []
    seen: set[str] = set()
    for row in table.rows:
        label = "null" if row[dim_idx] is None else str(row[dim_idx])
        raw = row[measure_idx]
        if raw is None or not math.isfinite(float(raw)):
            raise NotChartableError(f"measure value for {label!r} is not a finite number")
        if label in seen:
            raise NotChartableError(f"duplicate dimension label {label!r}")
        seen.add(label)
        points.append(ChartPoint(label=label, value=float(raw)))

    if hint is not None and _hint_valid(hint, dim_col.type, points):
        chart_type = hint
    elif dim_col.type == "date":
        chart_type = "area"
    elif len(points) <= DONUT_AUTO_MAX_ROWS and all(p.value >= 0 for p in points):
        chart_type = "donut"
    else:
        chart_type = "bar"
    return ChartSpec(
        chart_type=chart_type,
        title=f"{measure_col.name} by {dim_col.name}",
        dimension=dim_col.name,
        measure=measure_col.name,
        data=tuple(points),
    )
