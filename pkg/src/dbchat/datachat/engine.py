"""Query execution and CSV ingestion against the embedded SQL engine."""

from __future__ import annotations

import csv
import re
import sqlite3
from pathlib import Path

from ..errors import DbChatError
from ..values import Column, ResultTable
from .safety import validate_sql
from .schema import SchemaDescriptor, _quote_ident, describe_schema

DEFAULT_ROW_LIMIT = 10_000

_DATE_RE = re.compile(r"^\d{4}-(0[1-9]|1[0-2])(-(0[1-9]|[12]\d|3[01]))?$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_TABLE_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class SqlExecutionError(DbChatError):
    pass


class CsvParseError(DbChatError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateTableError(DbChatError):
    def __init__(self, table_name: str):
        self.table_name = table_name
        super().__init__(f"table {table_name!r} already exists")


def is_iso_date(value: str) -> bool:
    """ISO-8601 calendar date, full (YYYY-MM-DD) or reduced (YYYY-MM) precision."""
    return bool(_DATE_RE.match(value))


def _infer_value_type(values: list) -> str:
    non_null = [v for v in values if v is not None]
    if not non_null:
        return "text"
    if all(isinstance(v, int) and not isinstance(v, bool) for v in non_null):
        return "integer"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in non_null):
        return "real"
    if all(isinstance(v, str) and is_iso_date(v) for v in non_null):
        return "date"
    return "text"


def execute_sql(
    sql: str,
    connection: sqlite3.Connection,
    row_limit: int = DEFAULT_ROW_LIMIT,
) -> ResultTable:
    """Run one validated read-only statement; truncate at ``row_limit``.

    The safety gate is re-applied here and the engine itself runs in
    query-only mode for the duration, so even a statement that slipped the
    keyword check cannot write.
    """
    validate_sql(sql)
    try:
        prior = connection.execute("PRAGMA query_only").fetchone()[0]
        connection.execute("PRAGMA query_only = ON")
        try:
            cursor = connection.execute(sql)
            raw_rows = cursor.fetchmany(row_limit + 1)
            names = [d[0] for d in cursor.description] if cursor.description else []
        finally:
            connection.execute(f"PRAGMA query_only = {'ON' if prior else 'OFF'}")
    except sqlite3.Error as exc:
        raise SqlExecutionError(str(exc)) from exc
    truncated = len(raw_rows) > row_limit
    rows = tuple(tuple(r) for r in raw_rows[:row_limit])
    columns = tuple(
        Column(name=name, type=_infer_value_type([r[i] for r in rows]))
        for i, name in enumerate(names)
    )
    return ResultTable(columns=columns, rows=rows, truncated=truncated)


def _infer_csv_type(cells: list[str]) -> str:
    non_empty = [c for c in cells if c != ""]
    if not non_empty:
        return "text"
    if all(_INT_RE.match(c) for c in non_empty):
        return "integer"
    try:
        for c in non_empty:
            float(c)
    except ValueError:
        pass
    else:
        return "real"
    if all(is_iso_date(c) for c in non_empty):
        return "date"
    return "text"


CSV_TYPE_ORDER = ("integer", "real", "date", "text")

_CONVERTERS = {
    "integer": int,
    "real": float,
    "date": str,
    "text": str,
}

_DDL_TYPES = {"integer": "INTEGER", "real": "REAL", "date": "DATE", "text": "TEXT"}


def load_csv(
    path: str | Path, table_name: str, connection: sqlite3.Connection
) -> SchemaDescriptor:
    """Ingest an RFC-4180 CSV (header row required) into a new table.

    Column types are inferred as the first of integer, real, date, text that
    parses every non-empty cell.  Empty cells become NULL.
    """
    if not _TABLE_NAME_RE.match(table_name):
        raise CsvParseError(0, f"invalid table name {table_name!r}")
    exists = connection.execute(
        "SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = ?", (table_name,)
    ).fetchone()
    if exists:
        raise DuplicateTableError(table_name)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(1, "missing header row") from None
        if not header or any(not name.strip() for name in header):
            raise CsvParseError(1, "blank column name in header")
        data: list[list[str]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(line_no, f"expected {len(header)} fields, got {len(row)}")
            data.append(row)
    types = [
        _infer_csv_type([row[i] for row in data]) for i in range(len(header))
    ]
    decls = ", ".join(
        f"{_quote_ident(name.strip())} {_DDL_TYPES[ctype]}"
        for name, ctype in zip(header, types)
    )
    converted = [
        tuple(
            None if cell == "" else _CONVERTERS[ctype](cell)
            for cell, ctype in zip(row, types)
        )
        for row in data
    ]
    placeholders = ", ".join("?" * len(header))
    try:
        connection.execute(f"CREATE TABLE {_quote_ident(table_name)} ({decls})")
        if converted:
            connection.executemany(
                f"INSERT INTO {_quote_ident(table_name)} VALUES ({placeholders})",
                converted,
            )
        connection.commit()
    except sqlite3.Error as exc:
        raise SqlExecutionError(str(exc)) from exc
    return describe_schema(connection)
