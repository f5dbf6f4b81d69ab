"""Independent brute-force oracles used by the tests.

``interpret`` evaluates an operation tree directly over in-memory rows with
plain Python loops: no SQL is generated anywhere here, so it cross-checks the
compile/execute path. SQL comparison semantics are mirrored deliberately:
NULL never satisfies a comparison, LIKE-style contains is case-insensitive,
set operations deduplicate, argmin/argmax keep all tied rows, SUM/AVG ignore
NULLs and are NULL over nothing, and GROUP BY puts NULLs in one group.

``brute_force_paths`` re-enumerates edge-simple join paths by undirected DFS
for comparison with the schema module.
"""

from __future__ import annotations

import sqlite3

from otforge.trees import OperationKind, OtNode

Row = dict[str, object]  # qualified column name -> value


def load_tables(db_path: str) -> dict[str, list[Row]]:
    """Raw rows per table, keyed by qualified column names."""
    conn = sqlite3.connect(db_path)
    try:
        tables = {}
        names = [
            r[0]
            for r in conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%'"
            )
        ]
        for name in names:
            cur = conn.execute(f'SELECT * FROM "{name}"')
            cols = [d[0] for d in cur.description]
            tables[name] = [
                {f"{name}.{col}": value for col, value in zip(cols, row)} for row in cur.fetchall()
            ]
        return tables
    finally:
        conn.close()


def _matches(cell: object, comparator: str, value: object) -> bool:
    if cell is None:
        return False
    if comparator == "contains":
        return str(value).lower() in str(cell).lower()
    if comparator == "=":
        return cell == value
    if comparator == "!=":
        return cell != value
    if comparator == "<":
        return cell < value  # type: ignore[operator]
    if comparator == "<=":
        return cell <= value  # type: ignore[operator]
    if comparator == ">":
        return cell > value  # type: ignore[operator]
    if comparator == ">=":
        return cell >= value  # type: ignore[operator]
    raise ValueError(f"unknown comparator {comparator}")


def _row_key(row: Row) -> tuple:
    return tuple(sorted(row.items(), key=lambda kv: kv[0]))


def _dedup(rows: list[Row]) -> list[Row]:
    seen = set()
    out = []
    for row in rows:
        key = _row_key(row)
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out


def _eval(node: OtNode, data: dict[str, list[Row]]) -> list[Row]:
    kind = node.kind

    if kind is OperationKind.GET_DATA:
        return [dict(r) for r in data[node.table]]

    if kind is OperationKind.SELECTION:
        rows = _eval(node.child, data)
        return [r for r in rows if _matches(r[node.attribute], node.comparator, node.value)]

    if kind is OperationKind.JOIN:
        left = _eval(node.left, data)
        right = _eval(node.right, data)
        out = []
        for lr in left:
            lv = lr[node.left_key]
            if lv is None:
                continue
            for rr in right:
                rv = rr[node.right_key]
                if rv is not None and lv == rv:
                    merged = dict(lr)
                    merged.update(rr)
                    out.append(merged)
        return out

    if kind in (OperationKind.UNION, OperationKind.INTERSECT, OperationKind.DIFF):
        left = _eval(node.left, data)
        right = _eval(node.right, data)
        right_keys = {_row_key(r) for r in right}
        if kind is OperationKind.UNION:
            return _dedup(left + right)
        if kind is OperationKind.INTERSECT:
            return _dedup([r for r in left if _row_key(r) in right_keys])
        return _dedup([r for r in left if _row_key(r) not in right_keys])

    if kind in (OperationKind.MIN, OperationKind.MAX):
        rows = _eval(node.child, data)
        values = [r[node.attribute] for r in rows if r[node.attribute] is not None]
        if not values:
            return []
        extremum = min(values) if kind is OperationKind.MIN else max(values)
        return [r for r in rows if r[node.attribute] == extremum]

    if kind is OperationKind.DISTINCT:
        return _dedup(_eval(node.child, data))

    raise ValueError(f"{kind} does not produce rows")


def interpret(node: OtNode, data: dict[str, list[Row]]) -> tuple[list[str], list[tuple]]:
    """(columns, rows) for any node, with the same column conventions as execution:
    table-producing nodes list all columns sorted by qualified name."""
    kind = node.kind

    if kind is OperationKind.DONE:
        return interpret(node.child, data)

    if kind is OperationKind.PROJECTION:
        rows = _eval(node.child, data)
        attrs = list(node.attributes or ())
        return attrs, [tuple(r[a] for a in attrs) for r in rows]

    if kind is OperationKind.COUNT:
        rows = _eval(node.child, data)
        return ["count(*)"], [(len(rows),)]

    if kind in (OperationKind.SUM, OperationKind.AVERAGE):
        rows = _eval(node.child, data)
        values = [r[node.attribute] for r in rows if r[node.attribute] is not None]
        label = ("sum" if kind is OperationKind.SUM else "avg") + f"({node.attribute})"
        if not values:
            return [label], [(None,)]
        total = sum(values)
        return [label], [(total if kind is OperationKind.SUM else total / len(values),)]

    if kind is OperationKind.IS_EMPTY:
        rows = _eval(node.child, data)
        return ["is_empty"], [(len(rows) == 0,)]

    if kind is OperationKind.GROUP_BY:
        rows = _eval(node.child, data)
        groups: dict = {}
        order: list = []
        for row in rows:
            key = row[node.group_attribute]
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(row[node.aggregation_attribute])
        label = f"{node.variant}({node.aggregation_attribute})"
        out = []
        for key in order:
            values = [v for v in groups[key] if v is not None]
            if node.variant == "count":
                agg = len(values)
            elif not values:
                agg = None
            elif node.variant == "sum":
                agg = sum(values)
            else:
                agg = sum(values) / len(values)
            out.append((key, agg))
        return [node.group_attribute, label], out

    rows = _eval(node, data)
    columns = sorted({c for r in rows for c in r}) if rows else sorted(_columns_of(node, data))
    return columns, [tuple(r[c] for c in columns) for r in rows]


def _columns_of(node: OtNode, data: dict[str, list[Row]]) -> set[str]:
    """Column set of a table-producing node even when it yields no rows."""
    if node.kind is OperationKind.GET_DATA:
        sample = data[node.table]
        if sample:
            return set(sample[0])
        return set()
    if node.kind is OperationKind.JOIN:
        return _columns_of(node.left, data) | _columns_of(node.right, data)
    return _columns_of(node.children[0], data)


def brute_force_paths(
    edges: list[tuple[str, str]], start: str, length: int
) -> set[tuple[tuple[str, ...], tuple[int, ...]]]:
    """All edge-simple table sequences of ``length`` tables, with used edge ids."""
    found: set[tuple[tuple[str, ...], tuple[int, ...]]] = set()

    def table_of(attr: str) -> str:
        return attr.split(".", 1)[0]

    def walk(tables: tuple[str, ...], used: tuple[int, ...]) -> None:
        if len(tables) == length:
            found.add((tables, used))
            return
        current = tables[-1]
        for index, (a, b) in enumerate(edges):
            if index in used:
                continue
            ta, tb = table_of(a), table_of(b)
            if current == ta:
                walk(tables + (tb,), used + (index,))
            elif current == tb:
                walk(tables + (ta,), used + (index,))

    walk((start,), ())
    return found
