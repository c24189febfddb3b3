"""Workflow protocol layer: DSL parsing, validation, batch/stream execution."""

from .dsl import (
    DslSyntaxError,
    DuplicateNodeIdError,
    UnknownNodeError,
    parse_dag_dsl,
    print_dag_dsl,
)
from .engine import (
    InvalidDagError,
    MissingInputError,
    NodeExecutionError,
    StreamRun,
    execute,
    execute_stream,
)
from .model import (
    MAP_FUNCTIONS,
    OPERATOR_KINDS,
    DagSpec,
    Edge,
    ExecutionReport,
    OperatorSpec,
    Violation,
)
from .validation import CyclicGraphError, topo_levels, topo_order, validate

__all__ = [
    "CyclicGraphError",
    "DagSpec",
    "DslSyntaxError",
    "DuplicateNodeIdError",
    "Edge",
    "ExecutionReport",
    "InvalidDagError",
    "MAP_FUNCTIONS",
    "MissingInputError",
    "NodeExecutionError",
    "OPERATOR_KINDS",
    "OperatorSpec",
    "StreamRun",
    "UnknownNodeError",
    "Violation",
    "execute",
    "execute_stream",
    "parse_dag_dsl",
    "print_dag_dsl",
    "topo_levels",
    "topo_order",
    "validate",
]
