"""Compile operation trees to SQL, execute them, and compare result sets.

Node mapping: GetData feeds FROM, Selection adds a WHERE conjunct, Join is an
INNER JOIN on the declared foreign-key pair, Union/Intersect/Diff become
UNION/INTERSECT/EXCEPT (set semantics: SQL deduplicates), Projection is the
SELECT list, Distinct wraps its input in SELECT DISTINCT, Count/Sum/Average
aggregate over the child, Min/Max are argmin/argmax via
``WHERE attr = (SELECT MIN(attr) FROM <child>)`` so ties return every row,
GroupBy emits GROUP BY with its variant aggregate, and IsEmpty compiles to
``SELECT NOT EXISTS(<child>)``.

Table-producing subtrees materialize every column of their tables under
qualified ``table.column`` aliases, sorted by name, which keeps set-operation
branches aligned and lets wrapped subqueries be referenced unambiguously.
A table may appear at most once per join scope (set-operation branches and
subqueries are separate scopes); trees that join a table to itself compile
to an UnsupportedNodeError.

The reference dialect is SQLite; ``execute`` accepts a file path or an open
connection. All compilation is deterministic: one tree, one SQL text.
"""

from __future__ import annotations

import math
import sqlite3
import time
from dataclasses import dataclass, field

from otforge.schema import SchemaGraph, connect, load_schema
from otforge.trees import (
    OperationKind,
    OperationTree,
    OtNode,
    SET_OP_KINDS,
    TABLE_KINDS,
    iter_nodes,
)

DEFAULT_ROW_CAP = 1000
DEFAULT_TIMEOUT_MS = 10000


class UnsupportedNodeError(Exception):
    """Tree shape the SQL backend cannot express."""


class ExecutionError(Exception):
    """Engine-level failure; carries the offending SQL."""

    def __init__(self, message: str, sql: str):
        super().__init__(f"{message}\n  sql: {sql}")
        self.sql = sql
        self.engine_message = message


class ExecutionTimeout(ExecutionError):
    pass


@dataclass(frozen=True)
class ResultSet:
    """Materialized query output; scalar results are 1x1."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    truncated: bool = False


@dataclass(frozen=True)
class NodeError:
    """Per-node failure inside intermediate_results."""

    message: str


# -- compilation --------------------------------------------------------------

_SQL_COMPARATORS = {"=": "=", "!=": "<>", "<": "<", "<=": "<=", ">": ">", ">=": ">="}

_SET_OP_SQL = {
    OperationKind.UNION: "UNION",
    OperationKind.INTERSECT: "INTERSECT",
    OperationKind.DIFF: "EXCEPT",
}

_AGG_SQL = {"avg": "AVG", "sum": "SUM", "count": "COUNT"}


def _quote(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _literal(value: object) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    raise UnsupportedNodeError(f"cannot render literal of type {type(value).__name__}")


def _condition(expr: str, comparator: str, value: object) -> str:
    if comparator == "contains":
        if not isinstance(value, str):
            raise UnsupportedNodeError("contains requires a text value")
        escaped = value.replace("\\", "\\\\").replace("%", "\\%").replace("_", "\\_")
        return f"{expr} LIKE {_literal('%' + escaped + '%')} ESCAPE '\\'"
    op = _SQL_COMPARATORS.get(comparator)
    if op is None:
        raise UnsupportedNodeError(f"unknown comparator {comparator!r}")
    return f"{expr} {op} {_literal(value)}"


@dataclass
class _Rel:
    """A relation in the current scope.

    ``columns`` maps qualified names to SQL expressions valid in this scope;
    ``from_clause`` is one FROM item (a table or a wrapped subquery).
    """

    columns: dict[str, str]
    from_clause: str
    joins: list[str] = field(default_factory=list)
    where: list[str] = field(default_factory=list)


class _Compiler:
    def __init__(self, schema: SchemaGraph):
        self.schema = schema
        self._aliases = 0

    def _fresh_alias(self) -> str:
        self._aliases += 1
        return f"s{self._aliases}"

    def _column(self, rel: _Rel, qualified: str, context: str) -> str:
        expr = rel.columns.get(qualified)
        if expr is None:
            raise UnsupportedNodeError(f"{context}: {qualified!r} is not available in this scope")
        return expr

    def _render(self, rel: _Rel, select_list: str, group_by: str | None = None, distinct: bool = False) -> str:
        parts = [f"SELECT {'DISTINCT ' if distinct else ''}{select_list}", f"FROM {rel.from_clause}"]
        parts.extend(rel.joins)
        if rel.where:
            parts.append("WHERE " + " AND ".join(rel.where))
        if group_by:
            parts.append(f"GROUP BY {group_by}")
        return " ".join(parts)

    def _select_all(self, rel: _Rel, distinct: bool = False) -> str:
        ordered = sorted(rel.columns)
        select_list = ", ".join(f"{rel.columns[q]} AS {_quote(q)}" for q in ordered)
        return self._render(rel, select_list, distinct=distinct)

    def _wrap(self, sql: str, column_names: list[str]) -> _Rel:
        alias = self._fresh_alias()
        quoted = _quote(alias)
        return _Rel(
            columns={q: f"{quoted}.{_quote(q)}" for q in column_names},
            from_clause=f"({sql}) AS {quoted}",
        )

    def relation(self, node: OtNode) -> _Rel:
        kind = node.kind

        if kind is OperationKind.GET_DATA:
            table = self.schema.table(node.table or "")
            if table is None:
                raise UnsupportedNodeError(f"unknown table {node.table!r}")
            quoted = _quote(table.name)
            return _Rel(
                columns={f"{table.name}.{a.name}": f"{quoted}.{_quote(a.name)}" for a in table.attributes},
                from_clause=quoted,
            )

        if kind is OperationKind.SELECTION:
            rel = self.relation(node.child)
            expr = self._column(rel, node.attribute or "", "Selection")
            rel.where.append(_condition(expr, node.comparator or "", node.value))
            return rel

        if kind is OperationKind.JOIN:
            left = self.relation(node.left)
            right = self.relation(node.right)
            if right.joins:
                right = self._wrap(self._select_all(right), sorted(right.columns))
            overlap = set(left.columns) & set(right.columns)
            if overlap:
                raise UnsupportedNodeError(
                    f"table columns {sorted(overlap)[:3]} appear on both sides of a join; "
                    "a table may occur at most once per join scope"
                )
            left_expr = self._column(left, node.left_key or "", "Join left key")
            right_expr = self._column(right, node.right_key or "", "Join right key")
            left.joins.append(f"JOIN {right.from_clause} ON {left_expr} = {right_expr}")
            left.joins.extend(right.joins)
            left.where.extend(right.where)
            left.columns.update(right.columns)
            return left

        if kind in SET_OP_KINDS:
            left = self.relation(node.left)
            right = self.relation(node.right)
            if set(left.columns) != set(right.columns):
                raise UnsupportedNodeError(f"{kind.value} branches produce different column sets")
            sql = f"{self._select_all(left)} {_SET_OP_SQL[kind]} {self._select_all(right)}"
            return self._wrap(sql, sorted(left.columns))

        if kind in (OperationKind.MIN, OperationKind.MAX):
            rel = self.relation(node.child)
            expr = self._column(rel, node.attribute or "", kind.value)
            agg = "MIN" if kind is OperationKind.MIN else "MAX"
            inner = self._render(rel, f"{agg}({expr})")
            rel.where.append(f"{expr} = ({inner})")
            return rel

        if kind is OperationKind.DISTINCT:
            rel = self.relation(node.child)
            return self._wrap(self._select_all(rel, distinct=True), sorted(rel.columns))

        raise UnsupportedNodeError(f"{kind.value} does not produce a table")

    def node_sql(self, node: OtNode) -> str:
        kind = node.kind

        if kind in TABLE_KINDS:
            return self._select_all(self.relation(node))

        if kind is OperationKind.DONE:
            return self.node_sql(node.child)

        if kind is OperationKind.PROJECTION:
            rel = self.relation(node.child)
            attrs = node.attributes or ()
            select_list = ", ".join(
                f"{self._column(rel, a, 'Projection')} AS {_quote(a)}" for a in attrs
            )
            return self._render(rel, select_list)

        if kind is OperationKind.COUNT:
            rel = self.relation(node.child)
            return self._render(rel, 'COUNT(*) AS "count(*)"')

        if kind in (OperationKind.SUM, OperationKind.AVERAGE):
            rel = self.relation(node.child)
            expr = self._column(rel, node.attribute or "", kind.value)
            agg = "SUM" if kind is OperationKind.SUM else "AVG"
            label = f"{agg.lower()}({node.attribute})"
            return self._render(rel, f"{agg}({expr}) AS {_quote(label)}")

        if kind is OperationKind.IS_EMPTY:
            rel = self.relation(node.child)
            return f'SELECT NOT EXISTS ({self._select_all(rel)}) AS "is_empty"'

        if kind is OperationKind.GROUP_BY:
            rel = self.relation(node.child)
            group_expr = self._column(rel, node.group_attribute or "", "GroupBy")
            agg_expr = self._column(rel, node.aggregation_attribute or "", "GroupBy")
            agg = _AGG_SQL.get(node.variant or "")
            if agg is None:
                raise UnsupportedNodeError(f"unknown GroupBy variant {node.variant!r}")
            label = f"{node.variant}({node.aggregation_attribute})"
            select_list = f"{group_expr} AS {_quote(node.group_attribute or '')}, {agg}({agg_expr}) AS {_quote(label)}"
            return self._render(rel, select_list, group_by=group_expr)

        raise UnsupportedNodeError(f"cannot compile node kind {kind.value}")


def compile_tree(tree: OperationTree, schema: SchemaGraph) -> str:
    """Deterministic SQL text for a valid tree."""
    return _Compiler(schema).node_sql(tree.root)


# -- execution ----------------------------------------------------------------

def _run_sql(
    conn: sqlite3.Connection,
    sql: str,
    row_cap: int,
    timeout_ms: int,
    as_boolean: bool,
) -> ResultSet:
    deadline = time.monotonic() + timeout_ms / 1000.0
    conn.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0, 2000)
    try:
        cursor = conn.execute(sql)
        rows = cursor.fetchmany(row_cap + 1)
    except sqlite3.OperationalError as exc:
        if "interrupt" in str(exc).lower():
            raise ExecutionTimeout(f"query exceeded {timeout_ms} ms", sql) from exc
        raise ExecutionError(str(exc), sql) from exc
    except sqlite3.Error as exc:
        raise ExecutionError(str(exc), sql) from exc
    finally:
        conn.set_progress_handler(None, 0)

    truncated = len(rows) > row_cap
    if truncated:
        rows = rows[:row_cap]
    columns = tuple(d[0] for d in cursor.description)
    if as_boolean and len(rows) == 1 and len(columns) == 1:
        rows = [(bool(rows[0][0]),)]
    return ResultSet(columns=columns, rows=tuple(tuple(r) for r in rows), truncated=truncated)


def execute(
    tree: OperationTree,
    source: str | sqlite3.Connection,
    schema: SchemaGraph | None = None,
    row_cap: int = DEFAULT_ROW_CAP,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> ResultSet:
    """Compile and run a tree; rows are capped with an explicit truncation flag."""
    conn, own = connect(source)
    try:
        schema = schema or load_schema(conn)
        sql = compile_tree(tree, schema)
        return _run_sql(conn, sql, row_cap, timeout_ms, tree.root.kind is OperationKind.IS_EMPTY)
    finally:
        if own:
            conn.close()


def intermediate_results(
    tree: OperationTree,
    source: str | sqlite3.Connection,
    schema: SchemaGraph | None = None,
    row_cap: int = DEFAULT_ROW_CAP,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> dict[str, ResultSet | NodeError]:
    """Result of executing the subtree rooted at every node, keyed by node path.

    Failures are recorded per node without aborting the walk.
    """
    conn, own = connect(source)
    try:
        schema = schema or load_schema(conn)
        out: dict[str, ResultSet | NodeError] = {}
        for path, node in iter_nodes(tree.root):
            try:
                sql = _Compiler(schema).node_sql(node)
                out[path] = _run_sql(conn, sql, row_cap, timeout_ms, node.kind is OperationKind.IS_EMPTY)
            except (UnsupportedNodeError, ExecutionError) as exc:
                out[path] = NodeError(str(exc))
        return out
    finally:
        if own:
            conn.close()


# -- result comparison --------------------------------------------------------

def _sort_key(row: tuple) -> tuple:
    key = []
    for cell in row:
        if cell is None:
            key.append((0, ""))
        elif isinstance(cell, bool):
            key.append((1, float(cell)))
        elif isinstance(cell, (int, float)):
            key.append((1, float(cell)))
        elif isinstance(cell, str):
            key.append((2, cell))
        else:
            key.append((3, repr(cell)))
    return tuple(key)


def _cells_equal(a: object, b: object) -> bool:
    if a is None or b is None:
        return a is None and b is None
    a_num = isinstance(a, (int, float, bool))
    b_num = isinstance(b, (int, float, bool))
    if a_num and b_num:
        return math.isclose(float(a), float(b), rel_tol=1e-9, abs_tol=1e-12)
    if a_num != b_num:
        return False
    return a == b


def result_sets_equal(a: ResultSet, b: ResultSet) -> bool:
    """Exact result-set matching: same column count, equal row multisets.

    Rows are compared after canonical sorting; numbers match within a 1e-9
    relative tolerance, text exactly, and NULL equals NULL.
    """
    if len(a.columns) != len(b.columns) or len(a.rows) != len(b.rows):
        return False
    rows_a = sorted(a.rows, key=_sort_key)
    rows_b = sorted(b.rows, key=_sort_key)
    return all(
        all(_cells_equal(x, y) for x, y in zip(ra, rb))
        for ra, rb in zip(rows_a, rows_b)
    )
