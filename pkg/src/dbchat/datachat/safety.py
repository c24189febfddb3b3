"""SQL safety gate: model-generated SQL is untrusted input.

Only a single SELECT (or WITH ... SELECT) statement passes.  String
literals, quoted identifiers, and comments are stripped before the keyword
scan so smuggled keywords are caught and quoted table names are not
falsely rejected.  The execution layer adds engine-level read-only mode on
top of this check.
"""

from __future__ import annotations

import re

from ..errors import DbChatError

MAX_STATEMENT_CHARS = 10_000

FORBIDDEN_KEYWORDS = frozenset(
    {
        "insert", "update", "delete", "drop", "alter", "create", "attach",
        "detach", "pragma", "replace", "vacuum", "reindex", "truncate",
        "grant", "revoke", "merge", "exec", "execute", "call", "into",
    }
)


class UnsafeSqlError(DbChatError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"unsafe sql: {reason}")


_STRIP_RE = re.compile(
    r"""
      '(?:[^']|'')*'          # single-quoted string literal
    | "(?:[^"]|"")*"          # double-quoted identifier
    | `[^`]*`                 # backtick identifier
    | \[[^\]]*\]              # bracket identifier
    | --[^\n]*                # line comment
    | /\*.*?\*/               # block comment
    """,
    re.DOTALL | re.VERBOSE,
)


def _strip_literals_and_comments(sql: str) -> str:
    return _STRIP_RE.sub(" ", sql)


def validate_sql(sql: str) -> None:
    """Raise :class:`UnsafeSqlError` unless ``sql`` is one read-only statement."""
    if len(sql) > MAX_STATEMENT_CHARS:
        raise UnsafeSqlError(f"statement exceeds {MAX_STATEMENT_CHARS} characters")
    stripped = _strip_literals_and_comments(sql)
    statements = [s for s in stripped.split(";") if s.strip()]
    if not statements:
        raise UnsafeSqlError("empty statement")
    if len(statements) > 1:
        raise UnsafeSqlError("multiple statements")
    words = re.findall(r"[a-zA-Z_]+", statements[0].lower())
    if not words or words[0] not in ("select", "with"):
        raise UnsafeSqlError(f"statement must start with SELECT or WITH, got {words[0] if words else 'nothing'!r}")
    for word in words:
        if word in FORBIDDEN_KEYWORDS:
            raise UnsafeSqlError(f"forbidden keyword {word.upper()}")
