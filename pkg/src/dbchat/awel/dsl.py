"""Textual workflow language: lexer, recursive-descent parser, and printer.

Grammar (authoritative)::

    dag      := "dag" STRING "{" node* edge* "}"
    node     := "node" IDENT ":" KIND "(" (kv ("," kv)*)? ")"
    KIND     := "input"|"output"|"map"|"join"|"branch"|"agent"
                |"stream_source"|"stream_transform"
    kv       := IDENT "=" (STRING | NUMBER | "true" | "false")
    edge     := IDENT "->" IDENT ("[" "when" "=" STRING "]")?

``#`` starts a comment running to end of line.  Strings are double-quoted
with backslash escapes ``\\"``, ``\\\\`` and ``\\n``.  All nodes must precede
all edges.  Error positions are reported as 1-based (line, column).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..errors import DbChatError
from .model import NODE_ID_RE, OPERATOR_KINDS, DagSpec, Edge, OperatorSpec


class DslSyntaxError(DbChatError):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        detail = f", found {found}" if found else ""
        super().__init__(f"{line}:{col}: expected {expected}{detail}")


class UnknownNodeError(DbChatError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"edge references unknown node {node_id!r}")


class DuplicateNodeIdError(DbChatError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"duplicate node id {node_id!r}")


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT | STRING | NUMBER | punctuation literal | EOF
    value: Any
    line: int
    col: int


_PUNCT = {"{", "}", "(", ")", ":", ",", "=", "[", "]"}


def _lex(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def err(expected: str, found: str = "") -> DslSyntaxError:
        return DslSyntaxError(line, col, expected, found)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == "-":
            if i + 1 < n and source[i + 1] == ">":
                tokens.append(_Token("->", "->", start_line, start_col))
                i += 2
                col += 2
                continue
            if i + 1 < n and source[i + 1].isdigit():
                pass  # negative number, handled below
            else:
                raise err("'->' or a number", "'-'")
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == '"':
            i += 1
            col += 1
            buf: list[str] = []
            while True:
                if i >= n:
                    raise DslSyntaxError(line, col, "closing '\"'", "end of input")
                c = source[i]
                if c == "\n":
                    raise DslSyntaxError(line, col, "closing '\"'", "end of line")
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise DslSyntaxError(line, col, "escape character", "end of input")
                    esc = source[i + 1]
                    if esc == "n":
                        buf.append("\n")
                    elif esc in ('"', "\\"):
                        buf.append(esc)
                    else:
                        raise DslSyntaxError(
                            line, col, "one of \\\" \\\\ \\n", f"'\\{esc}'"
                        )
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            tokens.append(_Token("STRING", "".join(buf), start_line, start_col))
            continue
        if ch.isdigit() or ch == "-":
            j = i + 1 if ch == "-" else i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            text = source[i:j]
            value: int | float
            if "." in text:
                try:
                    value = float(text)
                except ValueError:
                    raise err("a number", repr(text)) from None
            else:
                value = int(text)
            tokens.append(_Token("NUMBER", value, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        raise err("a token", repr(ch))
    tokens.append(_Token("EOF", None, line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise DslSyntaxError(
                tok.line, tok.col, expected or f"'{kind}'", self._describe(tok)
            )
        return self.next()

    def expect_keyword(self, word: str) -> _Token:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.value != word:
            raise DslSyntaxError(tok.line, tok.col, f"'{word}'", self._describe(tok))
        return self.next()

    @staticmethod
    def _describe(tok: _Token) -> str:
        if tok.kind == "EOF":
            return "end of input"
        if tok.kind == "STRING":
            return f'"{tok.value}"'
        return repr(str(tok.value))

    def parse_dag(self) -> DagSpec:
        self.expect_keyword("dag")
        name = self.expect("STRING", "dag name string").value
        self.expect("{")
        nodes: list[OperatorSpec] = []
        seen: set[str] = set()
        while self.peek().kind == "IDENT" and self.peek().value == "node":
            node = self.parse_node()
            if node.id in seen:
                raise DuplicateNodeIdError(node.id)
            seen.add(node.id)
            nodes.append(node)
        edges: list[Edge] = []
        while self.peek().kind == "IDENT":
            edges.append(self.parse_edge())
        self.expect("}", "'node', an edge, or '}'")
        self.expect("EOF", "end of input")
        for e in edges:
            for endpoint in (e.src, e.dst):
                if endpoint not in seen:
                    raise UnknownNodeError(endpoint)
        return DagSpec(name=name, nodes=nodes, edges=edges)

    def parse_node(self) -> OperatorSpec:
        self.expect_keyword("node")
        ident = self.expect("IDENT", "node id")
        if not NODE_ID_RE.match(ident.value):
            raise DslSyntaxError(
                ident.line, ident.col, "node id matching [a-z][a-z0-9_]*",
                repr(ident.value),
            )
        self.expect(":")
        kind_tok = self.expect("IDENT", "operator kind")
        if kind_tok.value not in OPERATOR_KINDS:
            raise DslSyntaxError(
                kind_tok.line,
                kind_tok.col,
                "one of " + "|".join(OPERATOR_KINDS),
                repr(kind_tok.value),
            )
        self.expect("(")
        config: dict[str, Any] = {}
        if self.peek().kind != ")":
            while True:
                key = self.expect("IDENT", "config key").value
                self.expect("=")
                config[key] = self.parse_scalar()
                if self.peek().kind == ",":
                    self.next()
                    continue
                break
        self.expect(")")
        return OperatorSpec(id=ident.value, kind=kind_tok.value, config=config)

    def parse_scalar(self) -> Any:
        tok = self.peek()
        if tok.kind == "STRING":
            return self.next().value
        if tok.kind == "NUMBER":
            return self.next().value
        if tok.kind == "IDENT" and tok.value in ("true", "false"):
            return self.next().value == "true"
        raise DslSyntaxError(
            tok.line, tok.col, "a string, number, 'true' or 'false'",
            self._describe(tok),
        )

    def parse_edge(self) -> Edge:
        src = self.expect("IDENT", "edge source").value
        self.expect("->", "'->'")
        dst = self.expect("IDENT", "edge target").value
        when: str | None = None
        if self.peek().kind == "[":
            self.next()
            self.expect_keyword("when")
            self.expect("=")
            when = self.expect("STRING", "when label string").value
            self.expect("]")
        return Edge(src, dst, when)


def parse_dag_dsl(source: str) -> DagSpec:
    """Parse workflow DSL text into a :class:`DagSpec`.

    Raises :class:`DslSyntaxError` with a 1-based (line, column) position,
    :class:`DuplicateNodeIdError`, or :class:`UnknownNodeError` for edges
    naming nodes that were never declared.
    """
    return _Parser(_lex(source)).parse_dag()


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{out}"'


def _format_scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return _quote(str(v))


def print_dag_dsl(dag: DagSpec) -> str:
    """Render a DagSpec back to DSL text; inverse of :func:`parse_dag_dsl`."""
    lines = [f"dag {_quote(dag.name)} {{"]
    for node in dag.nodes:
        kvs = ", ".join(f"{k}={_format_scalar(v)}" for k, v in node.config.items())
        lines.append(f"  node {node.id}: {node.kind}({kvs})")
    for edge in dag.edges:
        suffix = f" [when={_quote(edge.when)}]" if edge.when is not None else ""
        lines.append(f"  {edge.src} -> {edge.dst}{suffix}")
    lines.append("}")
    return "\n".join(lines) + "\n"
