"""Natural-language SQL paths: question -> SELECT, and SELECT -> explanation.

Both compose a schema-grounded prompt and send it through a completion
callable (``ctx.complete(messages) -> str``), so they work identically
against the scripted mock and a live model.
"""

from __future__ import annotations

import re

from ..errors import DbChatError
from .safety import validate_sql
from .schema import SchemaDescriptor, schema_to_ddl


class NoSqlInResponseError(DbChatError):
    def __init__(self, raw_response: str):
        self.raw_response = raw_response
        super().__init__("model response contains no SQL statement")


_FENCED_SQL_RE = re.compile(r"```sql\s*\n(.*?)```", re.DOTALL | re.IGNORECASE)
_SELECT_LINE_RE = re.compile(r"^\s*select\b", re.IGNORECASE)
_TABLE_REF_RE = re.compile(r"\b(?:from|join)\s+([A-Za-z_][A-Za-z0-9_]*)", re.IGNORECASE)


def extract_sql(response: str) -> str | None:
    """First fenced sql block, else the first statement starting at a SELECT line."""
    fenced = _FENCED_SQL_RE.search(response)
    if fenced:
        sql = fenced.group(1).strip()
        return sql or None
    lines = response.split("\n")
    for i, line in enumerate(lines):
        if not _SELECT_LINE_RE.match(line):
            continue
        collected = []
        for continuation in lines[i:]:
            if not continuation.strip():
                break
            collected.append(continuation)
            if continuation.rstrip().endswith(";"):
                break
        return "\n".join(collected).strip()
    return None


def referenced_tables(sql: str) -> list[str]:
    """Table names after FROM/JOIN keywords: sorted, unique."""
    return sorted(set(_TABLE_REF_RE.findall(sql)))


def text_to_sql(question: str, schema: SchemaDescriptor, ctx) -> str:
    """Ask the model for a single SELECT over the given schema.

    The returned statement has passed the safety gate; raises
    :class:`NoSqlInResponseError` when the model reply contains no SQL and
    propagates :class:`UnsafeSqlError` when it contains unsafe SQL.
    """
    if not schema.tables:
        raise ValueError("schema has no tables")
    prompt = (
        "Database schema:\n\n"
        f"{schema_to_ddl(schema)}\n\n"
        f"Question: {question}\n\n"
        "Answer with exactly one SQL SELECT statement inside a fenced ```sql block."
    )
    response = ctx.complete([{"role": "user", "content": prompt}])
    sql = extract_sql(response)
    if sql is None:
        raise NoSqlInResponseError(response)
    validate_sql(sql)
    return sql


def sql_to_text(sql: str, schema: SchemaDescriptor, ctx) -> str:
    """Explain a validated query in prose; falls back to a template naming
    the referenced tables when the model offers nothing."""
    validate_sql(sql)
    prompt = (
        "Database schema:\n\n"
        f"{schema_to_ddl(schema)}\n\n"
        "Explain in one short paragraph what this SQL query returns:\n\n"
        f"{sql}"
    )
    response = ctx.complete([{"role": "user", "content": prompt}]).strip()
    if response:
        return response
    tables = referenced_tables(sql)
    return f"This query reads from {', '.join(tables)}."
