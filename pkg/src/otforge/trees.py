"""Operation tree data model.

An operation tree is a binary tree of typed relational operations: leaf nodes
pull base tables, inner nodes filter/join/combine them, and the root fixes the
question type (list, count, sum, average, boolean, or grouped aggregate). The
model is schema-agnostic until validated against a :class:`~otforge.schema.SchemaGraph`.

All types here are immutable; every function is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator

from otforge.schema import ColumnType, SchemaGraph


class OperationKind(str, Enum):
    """Node types of an operation tree."""

    GET_DATA = "GetData"
    SELECTION = "Selection"
    JOIN = "Join"
    UNION = "Union"
    INTERSECT = "Intersect"
    DIFF = "Diff"
    MIN = "Min"
    MAX = "Max"
    GROUP_BY = "GroupBy"
    PROJECTION = "Projection"
    DISTINCT = "Distinct"
    COUNT = "Count"
    SUM = "Sum"
    AVERAGE = "Average"
    IS_EMPTY = "IsEmpty"
    DONE = "Done"


#: children per kind; fixed, checked by validate().
ARITY: dict[OperationKind, int] = {
    OperationKind.GET_DATA: 0,
    OperationKind.SELECTION: 1,
    OperationKind.JOIN: 2,
    OperationKind.UNION: 2,
    OperationKind.INTERSECT: 2,
    OperationKind.DIFF: 2,
    OperationKind.MIN: 1,
    OperationKind.MAX: 1,
    OperationKind.GROUP_BY: 1,
    OperationKind.PROJECTION: 1,
    OperationKind.DISTINCT: 1,
    OperationKind.COUNT: 1,
    OperationKind.SUM: 1,
    OperationKind.AVERAGE: 1,
    OperationKind.IS_EMPTY: 1,
    OperationKind.DONE: 1,
}

#: kinds that may (and may only) appear at the root of a tree.
ROOT_KINDS = frozenset(
    {
        OperationKind.DONE,
        OperationKind.COUNT,
        OperationKind.SUM,
        OperationKind.AVERAGE,
        OperationKind.IS_EMPTY,
        OperationKind.GROUP_BY,
    }
)

#: kinds allowed in the table-producing region below the root.
TABLE_KINDS = frozenset(
    {
        OperationKind.GET_DATA,
        OperationKind.SELECTION,
        OperationKind.JOIN,
        OperationKind.UNION,
        OperationKind.INTERSECT,
        OperationKind.DIFF,
        OperationKind.MIN,
        OperationKind.MAX,
        OperationKind.DISTINCT,
    }
)

SET_OP_KINDS = frozenset({OperationKind.UNION, OperationKind.INTERSECT, OperationKind.DIFF})

#: kinds counted as aggregations by the analysis module.
AGGREGATION_KINDS = frozenset(
    {
        OperationKind.COUNT,
        OperationKind.SUM,
        OperationKind.AVERAGE,
        OperationKind.MIN,
        OperationKind.MAX,
    }
)

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "contains")

GROUP_BY_VARIANTS = ("avg", "sum", "count")

#: canonical argument order per kind, shared by serialization and the
#: grammar linearization.
ARG_FIELDS: dict[OperationKind, tuple[str, ...]] = {
    OperationKind.GET_DATA: ("table",),
    OperationKind.SELECTION: ("attribute", "comparator", "value"),
    OperationKind.JOIN: ("left_key", "right_key"),
    OperationKind.PROJECTION: ("attributes",),
    OperationKind.GROUP_BY: ("variant", "group_attribute", "aggregation_attribute"),
    OperationKind.MIN: ("attribute",),
    OperationKind.MAX: ("attribute",),
    OperationKind.SUM: ("attribute",),
    OperationKind.AVERAGE: ("attribute",),
    OperationKind.UNION: (),
    OperationKind.INTERSECT: (),
    OperationKind.DIFF: (),
    OperationKind.DISTINCT: (),
    OperationKind.COUNT: (),
    OperationKind.IS_EMPTY: (),
    OperationKind.DONE: (),
}


@dataclass(frozen=True)
class OtNode:
    """One operation node. Only the fields named in ``ARG_FIELDS[kind]`` are set."""

    kind: OperationKind
    children: tuple["OtNode", ...] = ()
    table: str | None = None
    attribute: str | None = None
    attributes: tuple[str, ...] | None = None
    comparator: str | None = None
    value: object = None
    left_key: str | None = None
    right_key: str | None = None
    variant: str | None = None
    group_attribute: str | None = None
    aggregation_attribute: str | None = None

    def args(self) -> dict[str, object]:
        """Arguments of this node in canonical key order."""
        return {name: getattr(self, name) for name in ARG_FIELDS[self.kind]}

    @property
    def child(self) -> "OtNode":
        return self.children[0]

    @property
    def left(self) -> "OtNode":
        return self.children[0]

    @property
    def right(self) -> "OtNode":
        return self.children[1]


@dataclass(frozen=True)
class OperationTree:
    """A rooted operation tree, optionally bound to a schema by id."""

    root: OtNode
    id: str = ""
    schema_id: str = ""

    def structurally_equal(self, other: "OperationTree") -> bool:
        """True if both trees have identical nodes, ignoring id/schema binding."""
        return self.root == other.root

    def with_root(self, root: OtNode) -> "OperationTree":
        return replace(self, root=root)


# -- construction helpers -----------------------------------------------------

def get_data(table: str) -> OtNode:
    return OtNode(OperationKind.GET_DATA, table=table)


def selection(child: OtNode, attribute: str, comparator: str, value: object) -> OtNode:
    return OtNode(
        OperationKind.SELECTION,
        children=(child,),
        attribute=attribute,
        comparator=comparator,
        value=value,
    )


def join(left: OtNode, right: OtNode, left_key: str, right_key: str) -> OtNode:
    return OtNode(
        OperationKind.JOIN, children=(left, right), left_key=left_key, right_key=right_key
    )


def union(left: OtNode, right: OtNode) -> OtNode:
    return OtNode(OperationKind.UNION, children=(left, right))


def intersect(left: OtNode, right: OtNode) -> OtNode:
    return OtNode(OperationKind.INTERSECT, children=(left, right))


def diff(left: OtNode, right: OtNode) -> OtNode:
    return OtNode(OperationKind.DIFF, children=(left, right))


def argmin(child: OtNode, attribute: str) -> OtNode:
    """Rows of ``child`` attaining the minimum of ``attribute`` (all ties)."""
    return OtNode(OperationKind.MIN, children=(child,), attribute=attribute)


def argmax(child: OtNode, attribute: str) -> OtNode:
    """Rows of ``child`` attaining the maximum of ``attribute`` (all ties)."""
    return OtNode(OperationKind.MAX, children=(child,), attribute=attribute)


def group_by(child: OtNode, variant: str, group_attribute: str, aggregation_attribute: str) -> OtNode:
    return OtNode(
        OperationKind.GROUP_BY,
        children=(child,),
        variant=variant,
        group_attribute=group_attribute,
        aggregation_attribute=aggregation_attribute,
    )


def projection(child: OtNode, attributes: tuple[str, ...] | list[str]) -> OtNode:
    return OtNode(OperationKind.PROJECTION, children=(child,), attributes=tuple(attributes))


def distinct(child: OtNode) -> OtNode:
    return OtNode(OperationKind.DISTINCT, children=(child,))


def count(child: OtNode) -> OtNode:
    return OtNode(OperationKind.COUNT, children=(child,))


def sum_of(child: OtNode, attribute: str) -> OtNode:
    return OtNode(OperationKind.SUM, children=(child,), attribute=attribute)


def average(child: OtNode, attribute: str) -> OtNode:
    return OtNode(OperationKind.AVERAGE, children=(child,), attribute=attribute)


def is_empty(child: OtNode) -> OtNode:
    return OtNode(OperationKind.IS_EMPTY, children=(child,))


def done(child: OtNode) -> OtNode:
    return OtNode(OperationKind.DONE, children=(child,))


# -- traversal ----------------------------------------------------------------

ROOT_PATH = "r"


def iter_nodes(root: OtNode, path: str = ROOT_PATH) -> Iterator[tuple[str, OtNode]]:
    """Pre-order walk yielding (node_path, node); paths look like ``r.0.1``."""
    yield path, root
    for i, child in enumerate(root.children):
        yield from iter_nodes(child, f"{path}.{i}")


def node_at(root: OtNode, path: str) -> OtNode:
    """Resolve a node path produced by :func:`iter_nodes`."""
    parts = path.split(".")
    if parts[0] != ROOT_PATH:
        raise KeyError(f"bad node path: {path!r}")
    node = root
    for part in parts[1:]:
        index = int(part)
        if index >= len(node.children):
            raise KeyError(f"bad node path: {path!r}")
        node = node.children[index]
    return node


def replace_node(root: OtNode, path: str, new_node: OtNode) -> OtNode:
    """Return a copy of the tree with the node at ``path`` swapped out."""
    parts = path.split(".")
    if parts[0] != ROOT_PATH:
        raise KeyError(f"bad node path: {path!r}")

    def rebuild(node: OtNode, remaining: list[str]) -> OtNode:
        if not remaining:
            return new_node
        index = int(remaining[0])
        if index >= len(node.children):
            raise KeyError(f"bad node path: {path!r}")
        children = list(node.children)
        children[index] = rebuild(children[index], remaining[1:])
        return replace(node, children=tuple(children))

    return rebuild(root, parts[1:])


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    node_path: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


NUMERIC_TYPES = frozenset({ColumnType.INTEGER, ColumnType.REAL})


def _value_matches_type(value: object, column_type: ColumnType) -> bool:
    if value is None:
        return False
    if column_type is ColumnType.INTEGER:
        return isinstance(value, int) and not isinstance(value, bool)
    if column_type is ColumnType.REAL:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if column_type is ColumnType.TEXT:
        return isinstance(value, str)
    if column_type is ColumnType.BOOLEAN:
        # sqlite stores booleans as 0/1
        return isinstance(value, bool) or (isinstance(value, int) and value in (0, 1))
    if column_type is ColumnType.DATE:
        return isinstance(value, str)
    return False


def validate(tree: OperationTree, schema: SchemaGraph) -> ValidationResult:
    """Check a tree against the grammar and a schema.

    Violations are collected rather than raised; each names the offending node
    path and the rule it breaks. Structural problems (arity, node placement)
    are reported even when schema binding already failed.
    """
    violations: list[Violation] = []

    def flag(path: str, rule: str, message: str) -> None:
        violations.append(Violation(path, rule, message))

    if tree.schema_id and schema.schema_id and tree.schema_id != schema.schema_id:
        flag(ROOT_PATH, "schema-binding", f"tree is bound to schema {tree.schema_id!r}, not {schema.schema_id!r}")

    root = tree.root
    if root.kind not in ROOT_KINDS:
        flag(ROOT_PATH, "root-kind", f"root must be a question-type kind, got {root.kind.value}")

    for path, node in iter_nodes(root):
        expected = ARITY[node.kind]
        if len(node.children) != expected:
            flag(path, "arity", f"{node.kind.value} takes {expected} children, has {len(node.children)}")
        if path != ROOT_PATH and node.kind in ROOT_KINDS:
            flag(path, "placement", f"{node.kind.value} may only appear at the root")
        if node.kind is OperationKind.PROJECTION and not (
            path == f"{ROOT_PATH}.0" and root.kind is OperationKind.DONE
        ):
            flag(path, "placement", "Projection may only appear directly under Done")
        for name, arg in node.args().items():
            if arg is None:
                flag(path, "args", f"{node.kind.value} is missing {name}")

    if root.kind is OperationKind.DONE and root.children and root.child.kind is not OperationKind.PROJECTION:
        flag(f"{ROOT_PATH}.0", "placement", "Done requires a Projection child")
    if root.kind is not OperationKind.DONE and root.children and root.children[0].kind is OperationKind.PROJECTION:
        pass  # already flagged by the projection placement rule above

    # Schema-dependent checks walk bottom-up so each node knows the qualified
    # columns its subtree produces; None marks an unresolvable subtree.
    def visible(node: OtNode, path: str) -> tuple[str, ...] | None:
        kind = node.kind
        child_scopes = [visible(c, f"{path}.{i}") for i, c in enumerate(node.children)]
        if len(node.children) != ARITY[kind]:
            return None

        if kind is OperationKind.GET_DATA:
            if node.table is None:
                return None
            table = schema.table(node.table)
            if table is None:
                flag(path, "unknown-table", f"table {node.table!r} not in schema")
                return None
            return tuple(f"{table.name}.{a.name}" for a in table.attributes)

        if kind is OperationKind.JOIN:
            left_scope, right_scope = child_scopes
            for key, scope, side in ((node.left_key, left_scope, "left"), (node.right_key, right_scope, "right")):
                if key is None or scope is None:
                    continue
                if key not in scope:
                    rule = "scope" if schema.has_attribute(key) else "unknown-attribute"
                    flag(path, rule, f"join {side} key {key!r} is not produced by the {side} subtree")
            if node.left_key and node.right_key and not schema.is_fk_edge(node.left_key, node.right_key):
                flag(path, "join-key", f"({node.left_key}, {node.right_key}) is not a declared foreign-key edge")
            if left_scope is None or right_scope is None:
                return None
            return left_scope + right_scope

        if kind in SET_OP_KINDS:
            left_scope, right_scope = child_scopes
            if left_scope is not None and right_scope is not None and set(left_scope) != set(right_scope):
                flag(path, "setop-columns", f"{kind.value} branches produce different column sets")
            return left_scope

        # remaining kinds are unary
        scope = child_scopes[0] if child_scopes else None

        def check_attr(attr: str | None, role: str) -> None:
            if attr is None or scope is None:
                return
            if attr not in scope:
                rule = "scope" if schema.has_attribute(attr) else "unknown-attribute"
                flag(path, rule, f"{role} {attr!r} is not produced by the subtree")

        if kind is OperationKind.SELECTION:
            check_attr(node.attribute, "filter attribute")
            if node.comparator is not None and node.comparator not in COMPARATORS:
                flag(path, "comparator", f"unknown comparator {node.comparator!r}")
            ctype = schema.column_type(node.attribute) if node.attribute else None
            if ctype is not None:
                if node.comparator == "contains" and ctype is not ColumnType.TEXT:
                    flag(path, "comparator", f"contains requires a text attribute, {node.attribute} is {ctype.value}")
                if node.value is not None and not _value_matches_type(node.value, ctype):
                    flag(path, "value-type", f"value type mismatch: {node.attribute} is {ctype.value}")
            return scope

        if kind in (OperationKind.MIN, OperationKind.MAX, OperationKind.SUM, OperationKind.AVERAGE):
            check_attr(node.attribute, "aggregation attribute")
            if kind in (OperationKind.SUM, OperationKind.AVERAGE) and node.attribute:
                ctype = schema.column_type(node.attribute)
                if ctype is not None and ctype not in NUMERIC_TYPES:
                    flag(path, "aggregate-type", f"{kind.value} requires a numeric attribute, {node.attribute} is {ctype.value if ctype else '?'}")
            if kind in (OperationKind.SUM, OperationKind.AVERAGE):
                return (f"{kind.value.lower()}({node.attribute})",) if node.attribute else None
            return scope

        if kind is OperationKind.GROUP_BY:
            if node.variant is not None and node.variant not in GROUP_BY_VARIANTS:
                flag(path, "groupby", f"unknown GroupBy variant {node.variant!r}")
            check_attr(node.group_attribute, "group attribute")
            check_attr(node.aggregation_attribute, "aggregation attribute")
            if node.group_attribute is not None and node.group_attribute == node.aggregation_attribute:
                flag(path, "groupby", "group and aggregation attributes must differ")
            if node.variant in ("avg", "sum") and node.aggregation_attribute:
                ctype = schema.column_type(node.aggregation_attribute)
                if ctype is not None and ctype not in NUMERIC_TYPES:
                    flag(path, "groupby", f"{node.variant} aggregation requires a numeric attribute")
            if node.group_attribute is None or node.aggregation_attribute is None:
                return None
            return (node.group_attribute, f"{node.variant}({node.aggregation_attribute})")

        if kind is OperationKind.PROJECTION:
            if node.attributes is not None:
                if not node.attributes:
                    flag(path, "args", "Projection needs at least one attribute")
                for attr in node.attributes:
                    check_attr(attr, "projected attribute")
            return node.attributes

        if kind is OperationKind.COUNT:
            return ("count(*)",)
        if kind is OperationKind.IS_EMPTY:
            return ("is_empty",)
        # Done, Distinct pass the child scope through
        return scope

    visible(root, ROOT_PATH)
    return ValidationResult(tuple(violations))


def tables_used(root: OtNode) -> set[str]:
    """Names of all tables pulled by GetData leaves."""
    return {node.table for _, node in iter_nodes(root) if node.kind is OperationKind.GET_DATA and node.table}


def selections_in(root: OtNode) -> list[tuple[str, OtNode]]:
    """(path, node) for every Selection, in pre-order; these are the tree's constraints."""
    return [(path, node) for path, node in iter_nodes(root) if node.kind is OperationKind.SELECTION]
