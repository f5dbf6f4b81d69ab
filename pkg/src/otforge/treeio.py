"""Canonical tree format: UTF-8 JSON, one tree per line or file.

A record is the root node object, ``{"op": ..., "args": {...}, "children":
[...]}``, with optional top-level ``id`` and ``schema_id`` keys. Attribute
names are qualified ``table.column``. Serialization is deterministic (stable
key order), so equal trees produce byte-identical records.

Unicode comparator aliases (≠ ≤ ≥) are accepted on input and canonicalized
to their ASCII forms.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from otforge.trees import ARG_FIELDS, COMPARATORS, OperationKind, OperationTree, OtNode


class ParseError(Exception):
    """Malformed tree record; message carries the line/field when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


_KIND_BY_OP = {kind.value: kind for kind in OperationKind}

_COMPARATOR_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">=", "<>": "!="}


def _node_to_obj(node: OtNode) -> dict:
    args = {}
    for name in ARG_FIELDS[node.kind]:
        value = getattr(node, name)
        if name == "attributes" and value is not None:
            value = list(value)
        args[name] = value
    return {
        "op": node.kind.value,
        "args": args,
        "children": [_node_to_obj(child) for child in node.children],
    }


def serialize(tree: OperationTree) -> str:
    """One-line JSON record for a tree (ndjson-friendly)."""
    obj = _node_to_obj(tree.root)
    obj["id"] = tree.id
    obj["schema_id"] = tree.schema_id
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def _obj_to_node(obj: object, line: int | None, where: str) -> OtNode:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: node must be an object", line)
    if "op" not in obj:
        raise ParseError(f"{where}: missing op field", line)
    op = obj["op"]
    kind = _KIND_BY_OP.get(op)
    if kind is None:
        raise ParseError(f"{where}: unknown operation {op!r}", line)

    raw_args = obj.get("args", {})
    if not isinstance(raw_args, dict):
        raise ParseError(f"{where}: args must be an object", line)
    expected = ARG_FIELDS[kind]
    for key in raw_args:
        if key not in expected:
            raise ParseError(f"{where}: {op} does not take argument {key!r}", line)
    fields: dict[str, object] = {}
    for name in expected:
        if name not in raw_args or raw_args[name] is None:
            raise ParseError(f"{where}: {op} requires argument {name!r}", line)
        value = raw_args[name]
        if name == "attributes":
            if not isinstance(value, list) or not all(isinstance(a, str) for a in value):
                raise ParseError(f"{where}: attributes must be a list of strings", line)
            value = tuple(value)
        if name == "comparator":
            if not isinstance(value, str):
                raise ParseError(f"{where}: comparator must be a string", line)
            value = _COMPARATOR_ALIASES.get(value, value)
            if value not in COMPARATORS:
                raise ParseError(f"{where}: unknown comparator {value!r}", line)
        fields[name] = value

    raw_children = obj.get("children", [])
    if not isinstance(raw_children, list):
        raise ParseError(f"{where}: children must be an array", line)
    children = tuple(
        _obj_to_node(child, line, f"{where}.{i}") for i, child in enumerate(raw_children)
    )
    return OtNode(kind=kind, children=children, **fields)  # type: ignore[arg-type]


def parse(text: str, line: int | None = None) -> OperationTree:
    """Parse one canonical record back into a tree."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at column {exc.colno}: {exc.msg}", line or exc.lineno) from exc
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line)
    root = _obj_to_node(obj, line, "root")
    tree_id = obj.get("id", "")
    schema_id = obj.get("schema_id", "")
    if not isinstance(tree_id, str) or not isinstance(schema_id, str):
        raise ParseError("id and schema_id must be strings", line)
    return OperationTree(root=root, id=tree_id, schema_id=schema_id)


def write_trees(trees: Iterable[OperationTree], path: str | Path) -> int:
    """Write newline-delimited records; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8") as handle:
        for tree in trees:
            handle.write(serialize(tree))
            handle.write("\n")
            n += 1
    return n


def read_trees(path: str | Path) -> Iterator[OperationTree]:
    """Read newline-delimited records; parse errors carry the line number."""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            raw = raw.strip()
            if raw:
                yield parse(raw, line=lineno)
