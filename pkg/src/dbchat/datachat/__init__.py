"""Data-interaction tasks: schema-grounded SQL, CSV ingestion, charting."""

from .charts import NotChartableError, rows_to_chart
from .demo import CATEGORY_TOTALS, SEGMENT_TOTALS, build_demo_database
from .engine import (
    CsvParseError,
    DuplicateTableError,
    SqlExecutionError,
    execute_sql,
    is_iso_date,
    load_csv,
)
from .nl import NoSqlInResponseError, extract_sql, referenced_tables, sql_to_text, text_to_sql
from .safety import UnsafeSqlError, validate_sql
from .schema import (
    ColumnDescriptor,
    DatabaseConnectionError,
    ForeignKey,
    SchemaDescriptor,
    TableDescriptor,
    connect,
    describe_schema,
    schema_to_ddl,
)

__all__ = [
    "CATEGORY_TOTALS",
    "ColumnDescriptor",
    "CsvParseError",
    "DatabaseConnectionError",
    "DuplicateTableError",
    "ForeignKey",
    "NoSqlInResponseError",
    "NotChartableError",
    "SEGMENT_TOTALS",
    "SchemaDescriptor",
    "SqlExecutionError",
    "TableDescriptor",
    "UnsafeSqlError",
    "build_demo_database",
    "connect",
    "describe_schema",
    "execute_sql",
    "extract_sql",
    "is_iso_date",
    "load_csv",
    "referenced_tables",
    "rows_to_chart",
    "schema_to_ddl",
    "sql_to_text",
    "text_to_sql",
    "validate_sql",
]
