"""Schema catalog: introspection of the embedded SQL engine and the
DDL-style serialization placed in model prompts."""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field

from ..errors import DbChatError


class DatabaseConnectionError(DbChatError):
    pass


@dataclass(frozen=True)
class ColumnDescriptor:
    name: str
    type: str  # integer | real | text | date


@dataclass(frozen=True)
class ForeignKey:
    column: str
    ref_table: str
    ref_column: str


@dataclass(frozen=True)
class TableDescriptor:
    name: str
    columns: tuple[ColumnDescriptor, ...]
    primary_key: str | None = None
    foreign_keys: tuple[ForeignKey, ...] = ()


@dataclass(frozen=True)
class SchemaDescriptor:
    tables: tuple[TableDescriptor, ...] = ()

    def table_names(self) -> list[str]:
        return [t.name for t in self.tables]


def _map_declared_type(declared: str) -> str:
    upper = declared.upper()
    if "INT" in upper:
        return "integer"
    if any(tag in upper for tag in ("REAL", "FLOA", "DOUB", "NUMER", "DEC")):
        return "real"
    if "DATE" in upper or "TIME" in upper:
        return "date"
    return "text"


def connect(path: str = ":memory:") -> sqlite3.Connection:
    """Open the embedded engine; safe to hand to per-request callers."""
    conn = sqlite3.connect(path, check_same_thread=False)
    conn.execute("PRAGMA foreign_keys = ON")
    return conn


def describe_schema(connection: sqlite3.Connection) -> SchemaDescriptor:
    """Full catalog (tables, columns, primary and foreign keys), tables
    ordered by name for deterministic prompts."""
    try:
        rows = connection.execute(
            "SELECT name FROM sqlite_master WHERE type = 'table' "
            "AND name NOT LIKE 'sqlite_%' ORDER BY name"
        ).fetchall()
        tables = []
        for (table_name,) in rows:
            columns = []
            primary_key = None
            for _, col_name, declared, _, _, pk in connection.execute(
                f"PRAGMA table_info({_quote_ident(table_name)})"
            ):
                columns.append(ColumnDescriptor(name=col_name, type=_map_declared_type(declared or "")))
                if pk == 1:
                    primary_key = col_name
            fks = [
                ForeignKey(column=src, ref_table=ref_table, ref_column=ref_col or "id")
                for _, _, ref_table, src, ref_col, *_ in connection.execute(
                    f"PRAGMA foreign_key_list({_quote_ident(table_name)})"
                )
            ]
            fks.sort(key=lambda fk: (fk.column, fk.ref_table))
            tables.append(
                TableDescriptor(
                    name=table_name,
                    columns=tuple(columns),
                    primary_key=primary_key,
                    foreign_keys=tuple(fks),
                )
            )
        return SchemaDescriptor(tables=tuple(tables))
    except sqlite3.Error as exc:
        raise DatabaseConnectionError(str(exc)) from exc


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


_SQL_TYPES = {"integer": "INTEGER", "real": "REAL", "date": "DATE", "text": "TEXT"}


def schema_to_ddl(schema: SchemaDescriptor) -> str:
    """CREATE TABLE blocks with foreign keys as trailing comments; the
    serialization used inside model prompts."""
    blocks = []
    for table in schema.tables:
        lines = [f"CREATE TABLE {table.name} ("]
        for i, col in enumerate(table.columns):
            decl = f"  {col.name} {_SQL_TYPES[col.type]}"
            if col.name == table.primary_key:
                decl += " PRIMARY KEY"
            if i < len(table.columns) - 1:
                decl += ","
            lines.append(decl)
        lines.append(");")
        for fk in table.foreign_keys:
            lines.append(f"-- FOREIGN KEY: {table.name}.{fk.column} -> {fk.ref_table}.{fk.ref_column}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)
