"""Relational schema as an entity-relationship graph.

Tables are nodes, foreign keys are edges, and relationship ("bridge") tables
such as a movie/person cast table are flagged so downstream sampling can treat
them as connectors rather than entities. Join paths are enumerated over this
graph; literal values are drawn from the live database.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class SchemaError(Exception):
    """Raised when a schema cannot be loaded or is internally inconsistent."""


class NoValueAvailable(Exception):
    """Raised when a column holds no non-null value to sample."""


class ColumnType(str, Enum):
    INTEGER = "integer"
    REAL = "real"
    TEXT = "text"
    BOOLEAN = "boolean"
    DATE = "date"


def column_type_from_declared(declared: str) -> ColumnType:
    """Map a declared SQL column type onto the reduced five-type system."""
    name = (declared or "").strip().upper()
    if "DATE" in name or "TIME" in name:
        return ColumnType.DATE
    if "BOOL" in name:
        return ColumnType.BOOLEAN
    if "INT" in name:
        return ColumnType.INTEGER
    if any(tag in name for tag in ("REAL", "FLOA", "DOUB", "DEC", "NUMERIC")):
        return ColumnType.REAL
    # CHAR/CLOB/TEXT and anything untyped degrade to text
    return ColumnType.TEXT


@dataclass(frozen=True)
class Attribute:
    name: str
    column_type: ColumnType


@dataclass(frozen=True)
class Table:
    name: str
    attributes: tuple[Attribute, ...]
    is_bridge: bool = False
    key_columns: frozenset[str] = frozenset()

    def attribute(self, name: str) -> Attribute | None:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None

    def non_key_attributes(self) -> tuple[Attribute, ...]:
        return tuple(a for a in self.attributes if a.name not in self.key_columns)


@dataclass(frozen=True)
class FkEdge:
    """Directed foreign key: ``from_attr`` references ``to_attr`` (both qualified)."""

    from_attr: str
    to_attr: str

    @property
    def from_table(self) -> str:
        return self.from_attr.split(".", 1)[0]

    @property
    def to_table(self) -> str:
        return self.to_attr.split(".", 1)[0]

    def touches(self, table: str) -> bool:
        return table in (self.from_table, self.to_table)

    def other(self, table: str) -> str:
        return self.to_table if table == self.from_table else self.from_table


@dataclass(frozen=True)
class SchemaGraph:
    schema_id: str
    tables: tuple[Table, ...]
    fk_edges: tuple[FkEdge, ...]

    def table(self, name: str) -> Table | None:
        for table in self.tables:
            if table.name == name:
                return table
        return None

    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)

    def has_attribute(self, qualified: str) -> bool:
        return self.column_type(qualified) is not None

    def column_type(self, qualified: str) -> ColumnType | None:
        if "." not in qualified:
            return None
        table_name, attr_name = qualified.split(".", 1)
        table = self.table(table_name)
        if table is None:
            return None
        attr = table.attribute(attr_name)
        return attr.column_type if attr else None

    def is_fk_edge(self, key_a: str, key_b: str) -> bool:
        """True if the two qualified keys form a declared edge, either direction."""
        for edge in self.fk_edges:
            if (edge.from_attr, edge.to_attr) in ((key_a, key_b), (key_b, key_a)):
                return True
        return False

    def edge_between(self, table_a: str, table_b: str) -> FkEdge | None:
        for edge in self.fk_edges:
            if {edge.from_table, edge.to_table} == {table_a, table_b}:
                return edge
        return None

    def attribute_count(self) -> int:
        return sum(len(t.attributes) for t in self.tables)

    def to_dict(self) -> dict:
        return {
            "schema_id": self.schema_id,
            "tables": [
                {
                    "name": t.name,
                    "attributes": [{"name": a.name, "column_type": a.column_type.value} for a in t.attributes],
                    "is_bridge": t.is_bridge,
                    "key_columns": sorted(t.key_columns),
                }
                for t in self.tables
            ],
            "fk_edges": [{"from": e.from_attr, "to": e.to_attr} for e in self.fk_edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchemaGraph":
        tables = tuple(
            Table(
                name=t["name"],
                attributes=tuple(Attribute(a["name"], ColumnType(a["column_type"])) for a in t["attributes"]),
                is_bridge=bool(t.get("is_bridge", False)),
                key_columns=frozenset(t.get("key_columns", ())),
            )
            for t in data["tables"]
        )
        edges = tuple(FkEdge(e["from"], e["to"]) for e in data["fk_edges"])
        return cls(schema_id=data.get("schema_id", ""), tables=tables, fk_edges=edges)


# -- loading ------------------------------------------------------------------

def connect(source: str | sqlite3.Connection) -> tuple[sqlite3.Connection, bool]:
    """Open ``source`` if it is a descriptor; returns (connection, caller_should_close)."""
    if isinstance(source, sqlite3.Connection):
        return source, False
    path = str(source)
    if path != ":memory:" and not Path(path).exists():
        raise SchemaError(f"database not found: {path}")
    return sqlite3.connect(path), True


def _structure_digest(tables: Sequence[Table], edges: Sequence[FkEdge]) -> str:
    payload = json.dumps(
        [
            [(t.name, [(a.name, a.column_type.value) for a in t.attributes]) for t in tables],
            [(e.from_attr, e.to_attr) for e in edges],
        ],
        sort_keys=True,
    )
    return hashlib.sha1(payload.encode()).hexdigest()[:8]


def load_schema(
    source: str | sqlite3.Connection,
    bridge_overrides: Iterable[str] | None = None,
) -> SchemaGraph:
    """Introspect an SQLite database into a SchemaGraph.

    Bridge tables are detected heuristically (no non-key attributes, or a
    primary key composed entirely of foreign-key columns); ``bridge_overrides``
    forces additional tables to be treated as bridges.
    """
    conn, own = connect(source)
    try:
        cur = conn.execute(
            "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
        )
        table_names = [row[0] for row in cur.fetchall()]
        if not table_names:
            raise SchemaError("database has no tables")

        overrides = set(bridge_overrides or ())
        tables: list[Table] = []
        edges: list[FkEdge] = []
        columns_by_table: dict[str, set[str]] = {}
        for name in table_names:
            info = conn.execute(f'PRAGMA table_info("{name}")').fetchall()
            if not info:
                raise SchemaError(f"table {name!r} has no columns")
            attrs = tuple(Attribute(col[1], column_type_from_declared(col[2])) for col in info)
            pk_cols = {col[1] for col in info if col[5]}
            columns_by_table[name] = {a.name for a in attrs}

            fk_cols: set[str] = set()
            for fk in conn.execute(f'PRAGMA foreign_key_list("{name}")').fetchall():
                target_table, from_col, to_col = fk[2], fk[3], fk[4]
                if to_col is None:
                    pk_info = conn.execute(f'PRAGMA table_info("{target_table}")').fetchall()
                    pk = [c[1] for c in pk_info if c[5]]
                    if len(pk) != 1:
                        raise SchemaError(f"cannot resolve implicit FK target for {name}.{from_col}")
                    to_col = pk[0]
                fk_cols.add(from_col)
                edges.append(FkEdge(f"{name}.{from_col}", f"{target_table}.{to_col}"))

            key_cols = pk_cols | fk_cols
            non_key = [a for a in attrs if a.name not in key_cols]
            is_bridge = name in overrides or not non_key or (bool(pk_cols) and pk_cols <= fk_cols)
            tables.append(Table(name=name, attributes=attrs, is_bridge=is_bridge, key_columns=frozenset(key_cols)))

        for edge in edges:
            for side in (edge.from_attr, edge.to_attr):
                table_name, col = side.split(".", 1)
                if col not in columns_by_table.get(table_name, set()):
                    raise SchemaError(f"foreign key references missing column {side}")

        if isinstance(source, sqlite3.Connection):
            stem = "db"
        else:
            stem = "memory" if str(source) == ":memory:" else Path(str(source)).stem
        schema_id = f"{stem}@{_structure_digest(tables, edges)}"
        return SchemaGraph(schema_id=schema_id, tables=tuple(tables), fk_edges=tuple(sorted(edges, key=lambda e: (e.from_attr, e.to_attr))))
    except sqlite3.Error as exc:
        raise SchemaError(f"cannot introspect database: {exc}") from exc
    finally:
        if own:
            conn.close()


# -- join paths ---------------------------------------------------------------

@dataclass(frozen=True)
class JoinPath:
    """Tables visited in order, with the foreign-key edge used between neighbours."""

    tables: tuple[str, ...]
    edges: tuple[FkEdge, ...]

    def __len__(self) -> int:
        return len(self.tables)


def enumerate_join_paths(schema: SchemaGraph, result_table: str, length: int) -> list[JoinPath]:
    """All edge-simple paths of exactly ``length`` tables starting at ``result_table``.

    Edges may not repeat within a path, but tables may (self-referencing
    foreign keys stay expressible). Output order is deterministic:
    lexicographic by table sequence, then by edge.
    """
    if schema.table(result_table) is None:
        raise SchemaError(f"unknown result table {result_table!r}")
    if length < 1:
        raise ValueError("path length must be >= 1")

    found: list[JoinPath] = []

    def extend(tables: tuple[str, ...], used: tuple[FkEdge, ...]) -> None:
        if len(tables) == length:
            found.append(JoinPath(tables=tables, edges=used))
            return
        current = tables[-1]
        for edge in schema.fk_edges:
            if edge in used or not edge.touches(current):
                continue
            extend(tables + (edge.other(current),), used + (edge,))

    extend((result_table,), ())
    found.sort(key=lambda p: (p.tables, tuple((e.from_attr, e.to_attr) for e in p.edges)))
    return found


# -- value sampling -----------------------------------------------------------

def sample_value(
    source: str | sqlite3.Connection,
    table: str,
    attribute: str,
    rng: np.random.Generator,
) -> object:
    """Draw uniformly from the distinct non-null values of ``table.attribute``."""
    conn, own = connect(source)
    try:
        (n,) = conn.execute(
            f'SELECT COUNT(DISTINCT "{attribute}") FROM "{table}" WHERE "{attribute}" IS NOT NULL'
        ).fetchone()
        if n == 0:
            raise NoValueAvailable(f"{table}.{attribute} has no non-null values")
        offset = int(rng.integers(n))
        row = conn.execute(
            f'SELECT DISTINCT "{attribute}" FROM "{table}" WHERE "{attribute}" IS NOT NULL '
            f'ORDER BY "{attribute}" LIMIT 1 OFFSET {offset}'
        ).fetchone()
        return row[0]
    finally:
        if own:
            conn.close()
