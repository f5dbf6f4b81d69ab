"""Randomized generation of operation trees over a schema.

A draw runs seven steps: question type, result table and attributes, join
path, optional set operation over a path suffix (two branch copies with
differing filters), optional grouped-aggregate root, optional extremum, and
finally database-grounded filters. Trees are assembled joins-first, with
selections spliced in above the table they constrain, then the question-type
root on top. Batch sampling keeps only trees that execute with a non-empty
result.

Randomness is counter-based: draw ``i`` of a batch uses a Philox stream keyed
by ``(seed, i)``, so batches are reproducible and parallelize without
coordination.
"""

from __future__ import annotations

import json
import sqlite3
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from otforge import trees as T
from otforge.schema import (
    ColumnType,
    JoinPath,
    NoValueAvailable,
    SchemaGraph,
    enumerate_join_paths,
    sample_value,
)
from otforge.sqlgen import ExecutionError, UnsupportedNodeError, execute
from otforge.trees import OperationKind, OperationTree, OtNode

QUESTION_TYPES = ("list", "sum", "count", "average", "boolean")

_NUMERIC = (ColumnType.INTEGER, ColumnType.REAL)
_ORDERABLE = (ColumnType.INTEGER, ColumnType.REAL, ColumnType.DATE)

_SET_OP_KINDS = (OperationKind.UNION, OperationKind.INTERSECT, OperationKind.DIFF)


class ConfigError(ValueError):
    pass


def _as_range(value: int | tuple[int, int] | list[int], name: str) -> tuple[int, int]:
    if isinstance(value, int):
        return (value, value)
    lo, hi = int(value[0]), int(value[1])
    if lo < 1 or hi < lo:
        raise ConfigError(f"{name} must be a positive range, got {value!r}")
    return (lo, hi)


@dataclass(frozen=True)
class SampleConfig:
    """All sampling knobs; see the field names for the seven pipeline steps."""

    question_type: str | None = None
    result_table: str | None = None
    result_attribute_count: int | tuple[int, int] = (1, 2)
    path_length: int | tuple[int, int] = (1, 4)
    max_total_filters: int = 2
    max_filters_per_table: int = 1
    set_op_probability: float = 0.05
    group_by_probability: float = 0.15
    extremum_probability: float = 0.1
    max_attempts: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.question_type is not None and self.question_type not in QUESTION_TYPES:
            raise ConfigError(f"question_type must be one of {QUESTION_TYPES}, got {self.question_type!r}")
        for name in ("set_op_probability", "group_by_probability", "extremum_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if self.max_total_filters < 0:
            raise ConfigError("max_total_filters must be >= 0")
        if self.max_filters_per_table > self.max_total_filters:
            raise ConfigError("max_filters_per_table cannot exceed max_total_filters")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        _as_range(self.path_length, "path_length")
        _as_range(self.result_attribute_count, "result_attribute_count")

    @classmethod
    def from_json(cls, source: str | Path) -> "SampleConfig":
        data = json.loads(Path(source).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("path_length", "result_attribute_count"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            out[name] = list(value) if isinstance(value, tuple) else value
        return out


@dataclass(frozen=True)
class Rejected:
    """A draw the sampler could not turn into a structurally possible tree."""

    reason: str


@dataclass
class BatchStats:
    draws: int = 0
    accepted: int = 0
    rejections: Counter = field(default_factory=Counter)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.draws if self.draws else 0.0

    def to_dict(self) -> dict:
        return {
            "draws": self.draws,
            "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate,
            "rejections": dict(self.rejections),
        }


@dataclass
class BatchResult:
    trees: list[OperationTree]
    stats: BatchStats


class BudgetExhausted(Exception):
    """Raised when max_attempts*n draws did not yield n accepted trees."""

    def __init__(self, result: BatchResult, requested: int):
        super().__init__(
            f"accepted only {result.stats.accepted}/{requested} trees in {result.stats.draws} draws; "
            f"rejections: {dict(result.stats.rejections)}"
        )
        self.result = result


def _pick(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def _comparator_for(column_type: ColumnType, rng: np.random.Generator) -> str:
    if column_type is ColumnType.TEXT:
        return _pick(rng, ("=", "contains"))
    if column_type is ColumnType.BOOLEAN:
        return _pick(rng, ("=", "!="))
    return _pick(rng, ("=", "!=", "<", "<=", ">", ">="))


def _interesting_attributes(schema: SchemaGraph, tables: tuple[str, ...]) -> list[str]:
    """Filter/group/extremum candidates: all columns, except keys of bridge tables."""
    out: list[str] = []
    for name in tables:
        table = schema.table(name)
        if table is None:
            continue
        attrs = table.non_key_attributes() if table.is_bridge else table.attributes
        out.extend(f"{name}.{a.name}" for a in attrs)
    return out


@dataclass(frozen=True)
class _Filter:
    attribute: str
    comparator: str
    value: object

    @property
    def table(self) -> str:
        return self.attribute.split(".", 1)[0]


def _build_chain(tables: tuple[str, ...], edges, leaf) -> OtNode:
    """Left-deep joins down a path; ``leaf(table)`` builds each GetData (plus filters)."""
    node = leaf(tables[0])
    for i in range(1, len(tables)):
        edge = edges[i - 1]
        if edge.from_table == tables[i - 1]:
            left_key, right_key = edge.from_attr, edge.to_attr
        else:
            left_key, right_key = edge.to_attr, edge.from_attr
        node = T.join(node, leaf(tables[i]), left_key, right_key)
    return node


def sample_tree(
    config: SampleConfig,
    schema: SchemaGraph,
    source: str | sqlite3.Connection,
    rng: np.random.Generator,
    draw_index: int = 0,
) -> OperationTree | Rejected:
    """One structural draw; returns Rejected for draws that cannot exist.

    Nonsensical-but-executable trees (an average over a year column, say) are
    not rejected here: they go to annotators, who may adapt or skip them.
    """
    # step 1: question type
    question_type = config.question_type or _pick(rng, QUESTION_TYPES)

    # step 2: result table, then result attributes
    needs_numeric = question_type in ("sum", "average")
    if config.result_table is not None:
        result_table = schema.table(config.result_table)
        if result_table is None:
            raise ConfigError(f"unknown result_table {config.result_table!r}")
        if needs_numeric and not any(a.column_type in _NUMERIC for a in result_table.attributes):
            return Rejected("degenerate aggregation")
    else:
        candidates = [
            t for t in schema.tables
            if not needs_numeric or any(a.column_type in _NUMERIC for a in t.attributes)
        ]
        if not candidates:
            return Rejected("degenerate aggregation")
        result_table = _pick(rng, candidates)

    result_attrs: tuple[str, ...] = ()
    if question_type == "list":
        lo, hi = _as_range(config.result_attribute_count, "result_attribute_count")
        available = [f"{result_table.name}.{a.name}" for a in result_table.attributes]
        k = min(int(rng.integers(lo, hi + 1)), len(available))
        indexes = rng.choice(len(available), size=k, replace=False)
        result_attrs = tuple(available[int(i)] for i in indexes)
    elif needs_numeric:
        numeric = [f"{result_table.name}.{a.name}" for a in result_table.attributes if a.column_type in _NUMERIC]
        result_attrs = (_pick(rng, numeric),)

    # step 3: join path
    lo, hi = _as_range(config.path_length, "path_length")
    length = int(rng.integers(lo, hi + 1))
    paths = [
        p for p in enumerate_join_paths(schema, result_table.name, length)
        if len(set(p.tables)) == len(p.tables)
    ]
    if not paths:
        return Rejected("no join path")
    path: JoinPath = _pick(rng, paths)

    # step 4: set operation over a suffix of the path, two differing branch filters
    set_op: OperationKind | None = None
    suffix_start = len(path.tables)
    branch_filters: tuple[_Filter, _Filter] | None = None
    if rng.random() < config.set_op_probability:
        set_op = _pick(rng, _SET_OP_KINDS)
        suffix_len = int(rng.integers(1, len(path.tables) + 1))
        suffix_start = len(path.tables) - suffix_len
        suffix_tables = path.tables[suffix_start:]
        candidates = _interesting_attributes(schema, suffix_tables)
        order = rng.permutation(len(candidates)) if candidates else []
        for index in order:
            attribute = candidates[int(index)]
            table_name, attr_name = attribute.split(".", 1)
            ctype = schema.column_type(attribute)
            try:
                pair = []
                for _ in range(2):
                    pair.append(_Filter(
                        attribute,
                        _comparator_for(ctype, rng),
                        sample_value(source, table_name, attr_name, rng),
                    ))
                retries = 0
                while pair[0] == pair[1] and retries < 10:
                    pair[1] = _Filter(
                        attribute,
                        _comparator_for(ctype, rng),
                        sample_value(source, table_name, attr_name, rng),
                    )
                    retries += 1
            except NoValueAvailable:
                continue
            if pair[0] != pair[1]:
                branch_filters = (pair[0], pair[1])
                break
        if branch_filters is None:
            return Rejected("no sampleable value")

    # step 5: grouped-aggregate root. Only drawn question types convert, so a
    # fixed question_type always fixes the root kind.
    group: tuple[str, str, str] | None = None
    if (
        config.question_type is None
        and question_type in ("sum", "count", "average")
        and rng.random() < config.group_by_probability
    ):
        variant = {"sum": "sum", "count": "count", "average": "avg"}[question_type]
        pool = _interesting_attributes(schema, path.tables)
        if question_type == "count":
            agg_candidates = pool
        else:
            agg_candidates = list(result_attrs)
        if agg_candidates:
            agg_attr = _pick(rng, agg_candidates)
            group_candidates = [a for a in pool if a != agg_attr]
            if group_candidates:
                group = (variant, _pick(rng, group_candidates), agg_attr)

    # step 6: extremum
    extremum: tuple[OperationKind, str] | None = None
    if rng.random() < config.extremum_probability:
        orderable = [
            a for a in _interesting_attributes(schema, path.tables)
            if schema.column_type(a) in _ORDERABLE
        ]
        if orderable:
            kind = OperationKind.MIN if rng.random() < 0.5 else OperationKind.MAX
            extremum = (kind, _pick(rng, orderable))

    # step 7: filters on tables outside the set-operation suffix
    filters: list[_Filter] = []
    if config.max_total_filters > 0:
        target = int(rng.integers(0, config.max_total_filters + 1))
        filterable = path.tables[:suffix_start] if set_op else path.tables
        eligible = {name: _interesting_attributes(schema, (name,)) for name in filterable}
        per_table: Counter = Counter()
        while len(filters) < target:
            pool = [
                name for name, attrs in eligible.items()
                if attrs and per_table[name] < config.max_filters_per_table
            ]
            if not pool:
                break
            table_name = _pick(rng, sorted(pool))
            attrs = eligible[table_name]
            attribute = _pick(rng, attrs)
            _, attr_name = attribute.split(".", 1)
            try:
                value = sample_value(source, table_name, attr_name, rng)
            except NoValueAvailable:
                attrs.remove(attribute)
                continue
            comparator = _comparator_for(schema.column_type(attribute), rng)
            filters.append(_Filter(attribute, comparator, value))
            per_table[table_name] += 1

    # assembly: joins, then the set operation, then selections above their
    # tables, then aggregations, then the question-type root
    filters_by_table: dict[str, list[_Filter]] = {}
    for f in filters:
        filters_by_table.setdefault(f.table, []).append(f)

    def leaf(table_name: str) -> OtNode:
        node = T.get_data(table_name)
        for f in filters_by_table.get(table_name, ()):
            node = T.selection(node, f.attribute, f.comparator, f.value)
        return node

    if set_op is not None and branch_filters is not None:
        suffix_tables = path.tables[suffix_start:]
        suffix_edges = path.edges[suffix_start:]

        def branch(branch_filter: _Filter) -> OtNode:
            def branch_leaf(table_name: str) -> OtNode:
                node = T.get_data(table_name)
                if table_name == branch_filter.table:
                    node = T.selection(node, branch_filter.attribute, branch_filter.comparator, branch_filter.value)
                return node

            return _build_chain(suffix_tables, suffix_edges, branch_leaf)

        set_node = OtNode(set_op, children=(branch(branch_filters[0]), branch(branch_filters[1])))
        if suffix_start == 0:
            body = set_node
        else:
            prefix = _build_chain(path.tables[:suffix_start], path.edges[: suffix_start - 1], leaf)
            edge = path.edges[suffix_start - 1]
            if edge.from_table == path.tables[suffix_start - 1]:
                left_key, right_key = edge.from_attr, edge.to_attr
            else:
                left_key, right_key = edge.to_attr, edge.from_attr
            body = T.join(prefix, set_node, left_key, right_key)
    else:
        body = _build_chain(path.tables, path.edges, leaf)

    if extremum is not None:
        kind, attribute = extremum
        body = OtNode(kind, children=(body,), attribute=attribute)

    if group is not None:
        variant, group_attr, agg_attr = group
        root = T.group_by(body, variant, group_attr, agg_attr)
    elif question_type == "list":
        root = T.done(T.projection(body, result_attrs))
    elif question_type == "sum":
        root = T.sum_of(body, result_attrs[0])
    elif question_type == "average":
        root = T.average(body, result_attrs[0])
    elif question_type == "count":
        root = T.count(body)
    else:
        root = T.is_empty(body)

    tree = OperationTree(
        root=root,
        id=f"ot-{config.seed & 0xFFFFFFFFFFFFFFFF:x}-{draw_index:05d}",
        schema_id=schema.schema_id,
    )
    check = T.validate(tree, schema)
    if not check.ok:  # sampler bug, not a samplable condition
        raise AssertionError(f"sampler produced an invalid tree: {check.violations}")
    return tree


def draw_rng(seed: int, draw_index: int) -> np.random.Generator:
    """Independent counter-based stream for one draw of a batch."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(draw_index,))))


def _is_empty_result(rows: tuple, columns: tuple) -> bool:
    if not rows:
        return True
    # a lone NULL scalar (e.g. AVG over nothing) is as uninformative as no rows
    return len(rows) == 1 and len(columns) == 1 and rows[0][0] is None


def _evaluate_draw(
    config: SampleConfig,
    schema: SchemaGraph,
    db_path: str,
    index: int,
) -> tuple[str, object]:
    conn = sqlite3.connect(db_path)
    try:
        result = sample_tree(config, schema, conn, draw_rng(config.seed, index), draw_index=index)
        if isinstance(result, Rejected):
            return "rejected", result.reason
        try:
            rs = execute(result, conn, schema, row_cap=1)
        except (ExecutionError, UnsupportedNodeError):
            return "rejected", "execution error"
        if _is_empty_result(rs.rows, rs.columns):
            return "rejected", "empty result"
        return "accepted", result
    finally:
        conn.close()


def sample_batch(
    config: SampleConfig,
    schema: SchemaGraph,
    source: str,
    n: int,
    jobs: int = 1,
) -> BatchResult:
    """First ``n`` draws that execute non-empty, in draw order.

    Every kept tree has been compiled and run against ``source``. Gives up
    with BudgetExhausted (carrying the partial batch and a rejection
    histogram) after ``max_attempts * n`` draws.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    budget = config.max_attempts * n
    stats = BatchStats()
    trees: list[OperationTree] = []
    db_path = str(source)

    if jobs <= 1:
        for index in range(budget):
            status, payload = _evaluate_draw(config, schema, db_path, index)
            stats.draws += 1
            if status == "accepted":
                trees.append(payload)
                stats.accepted += 1
                if len(trees) == n:
                    return BatchResult(trees, stats)
            else:
                stats.rejections[payload] += 1
        raise BudgetExhausted(BatchResult(trees, stats), n)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        next_index = 0
        while next_index < budget and len(trees) < n:
            wave = list(range(next_index, min(next_index + jobs * 8, budget)))
            next_index = wave[-1] + 1
            results = pool.map(lambda i: _evaluate_draw(config, schema, db_path, i), wave)
            for status, payload in results:
                stats.draws += 1
                if status == "accepted":
                    if len(trees) < n:
                        trees.append(payload)
                        stats.accepted += 1
                else:
                    stats.rejections[payload] += 1
                if len(trees) == n:
                    break
    if len(trees) == n:
        return BatchResult(trees, stats)
    raise BudgetExhausted(BatchResult(trees, stats), n)
