"""Per-tree hardness and corpus-level statistics.

Hardness is a weighted component count over the tree (joins, grouped
aggregates, set operations, filters, aggregations, boolean roots) bucketed
into four categories. Corpus statistics cover schema coverage, lexical
diversity of the questions (mean-segmental type-token ratio), and mean
component ratios per query.

Weights, thresholds, segment length, and the tokenizer are all configurable;
the defaults are documented here rather than hidden in call sites.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

from otforge.schema import SchemaGraph
from otforge.trees import (
    AGGREGATION_KINDS,
    SET_OP_KINDS,
    OperationKind,
    OperationTree,
    iter_nodes,
)


class HardnessCategory(str, Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    HARD = "Hard"
    EXTRA_HARD = "Extra Hard"


@dataclass(frozen=True)
class HardnessWeights:
    join: int = 1
    group_by: int = 2
    set_op: int = 2
    selection: int = 1
    aggregation: int = 1
    is_empty: int = 1


@dataclass(frozen=True)
class HardnessThresholds:
    """Raw-score upper bounds: <=easy Easy, <=medium Medium, <=hard Hard, else Extra Hard."""

    easy: int = 1
    medium: int = 3
    hard: int = 5


@dataclass(frozen=True)
class Hardness:
    category: HardnessCategory
    raw_score: int


@dataclass(frozen=True)
class ComponentCounts:
    """Exact node-kind tally plus the derived counts the reports use."""

    by_kind: dict[OperationKind, int]
    having: int

    @property
    def joins(self) -> int:
        return self.by_kind.get(OperationKind.JOIN, 0)

    @property
    def selections(self) -> int:
        return self.by_kind.get(OperationKind.SELECTION, 0)

    @property
    def set_ops(self) -> int:
        return sum(self.by_kind.get(k, 0) for k in SET_OP_KINDS)

    @property
    def group_bys(self) -> int:
        return self.by_kind.get(OperationKind.GROUP_BY, 0)

    @property
    def aggregations(self) -> int:
        return sum(self.by_kind.get(k, 0) for k in AGGREGATION_KINDS)

    @property
    def booleans(self) -> int:
        return self.by_kind.get(OperationKind.IS_EMPTY, 0)


def component_counts(tree: OperationTree) -> ComponentCounts:
    by_kind: Counter = Counter()
    having = 0
    for _, node in iter_nodes(tree.root):
        by_kind[node.kind] += 1
        # a filter applied on top of a grouped aggregate acts as a HAVING
        if node.kind is OperationKind.SELECTION and node.children and node.child.kind is OperationKind.GROUP_BY:
            having += 1
    return ComponentCounts(by_kind=dict(by_kind), having=having)


def hardness(
    tree: OperationTree,
    weights: HardnessWeights = HardnessWeights(),
    thresholds: HardnessThresholds = HardnessThresholds(),
) -> Hardness:
    counts = component_counts(tree)
    raw = (
        weights.join * counts.joins
        + weights.group_by * counts.group_bys
        + weights.set_op * counts.set_ops
        + weights.selection * counts.selections
        + weights.aggregation * counts.aggregations
        + weights.is_empty * counts.booleans
    )
    if raw <= thresholds.easy:
        category = HardnessCategory.EASY
    elif raw <= thresholds.medium:
        category = HardnessCategory.MEDIUM
    elif raw <= thresholds.hard:
        category = HardnessCategory.HARD
    else:
        category = HardnessCategory.EXTRA_HARD
    return Hardness(category=category, raw_score=raw)


# -- coverage -----------------------------------------------------------------

def attributes_used(tree: OperationTree) -> set[str]:
    """Qualified attributes the tree references anywhere."""
    used: set[str] = set()
    for _, node in iter_nodes(tree.root):
        for attr in (node.attribute, node.left_key, node.right_key, node.group_attribute, node.aggregation_attribute):
            if attr:
                used.add(attr)
        if node.attributes:
            used.update(node.attributes)
    return used


def coverage(corpus: Sequence[OperationTree], schema: SchemaGraph) -> tuple[float, float]:
    """(table_coverage, attribute_coverage): the fraction of the schema the corpus touches."""
    all_tables = set(schema.table_names())
    all_attrs = {f"{t.name}.{a.name}" for t in schema.tables for a in t.attributes}
    used_tables: set[str] = set()
    used_attrs: set[str] = set()
    for tree in corpus:
        if tree.schema_id and schema.schema_id and tree.schema_id != schema.schema_id:
            raise ValueError(f"tree {tree.id!r} is bound to schema {tree.schema_id!r}, not {schema.schema_id!r}")
        for _, node in iter_nodes(tree.root):
            if node.kind is OperationKind.GET_DATA and node.table:
                used_tables.add(node.table)
        used_attrs.update(attributes_used(tree))
    if not all_tables or not corpus:
        return (0.0, 0.0)
    return (
        len(used_tables & all_tables) / len(all_tables),
        len(used_attrs & all_attrs) / len(all_attrs),
    )


# -- lexical statistics ---------------------------------------------------------

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

Tokenizer = Callable[[str], list[str]]


def tokenize(text: str) -> list[str]:
    """Whitespace and punctuation splitting, lowercased; punctuation marks stay tokens."""
    return _TOKEN_RE.findall(text.lower())


def msttr(token_sequences: Iterable[Sequence[str]], segment_length: int = 50) -> float | None:
    """Mean-segmental type-token ratio over fixed-length segments.

    All tokens are concatenated (lowercased), cut into consecutive segments of
    exactly ``segment_length``, the trailing partial segment dropped, and the
    per-segment distinct-type ratio averaged. Returns None (undefined, not 0)
    when fewer than ``segment_length`` tokens exist.
    """
    if segment_length < 1:
        raise ValueError("segment_length must be >= 1")
    tokens = [token.lower() for seq in token_sequences for token in seq]
    if len(tokens) < segment_length:
        return None
    ratios = []
    for start in range(0, len(tokens) - segment_length + 1, segment_length):
        segment = tokens[start:start + segment_length]
        ratios.append(len(set(segment)) / segment_length)
    return sum(ratios) / len(ratios)


# -- corpus report --------------------------------------------------------------

RATIO_COLUMNS = ("avg_joins", "group_by", "having", "set_op", "aggregations", "boolean")


@dataclass
class CorpusReport:
    database: str
    query_count: int
    table_coverage: float
    attribute_coverage: float
    msttr: float | None
    avg_tokens: float | None
    ratios: dict[str, float]
    hardness_histogram: dict[str, int]
    avg_phase1_seconds: float | None = None
    avg_phase2_seconds: float | None = None
    segment_length: int = 50

    def to_dict(self) -> dict:
        return {
            "database": self.database,
            "query_count": self.query_count,
            "table_coverage": self.table_coverage,
            "attribute_coverage": self.attribute_coverage,
            "msttr": self.msttr,
            "avg_tokens": self.avg_tokens,
            "ratios": dict(self.ratios),
            "hardness_histogram": dict(self.hardness_histogram),
            "avg_phase1_seconds": self.avg_phase1_seconds,
            "avg_phase2_seconds": self.avg_phase2_seconds,
            "segment_length": self.segment_length,
        }

    def to_text(self) -> str:
        def fmt(value: float | None, digits: int = 3) -> str:
            return "-" if value is None else f"{value:.{digits}f}"

        lines = [
            f"database             {self.database}",
            f"queries              {self.query_count}",
            f"table coverage       {fmt(self.table_coverage)}",
            f"attribute coverage   {fmt(self.attribute_coverage)}",
            f"msttr                {fmt(self.msttr)}",
            f"avg tokens           {fmt(self.avg_tokens, 2)}",
        ]
        header = "".join(f"{name:>14}" for name in RATIO_COLUMNS)
        values = "".join(f"{self.ratios.get(name, 0.0):>14.3f}" for name in RATIO_COLUMNS)
        lines += ["", "component ratios per query:", header, values, ""]
        lines.append("hardness: " + "  ".join(
            f"{cat.value} {self.hardness_histogram.get(cat.value, 0)}" for cat in HardnessCategory
        ))
        return "\n".join(lines)

    def to_tsv(self) -> str:
        columns = [
            "database", "query_count", "table_coverage", "attribute_coverage",
            "msttr", "avg_tokens", *RATIO_COLUMNS,
            *[f"hardness_{c.value.replace(' ', '_').lower()}" for c in HardnessCategory],
        ]
        values = [
            self.database, self.query_count, self.table_coverage, self.attribute_coverage,
            self.msttr, self.avg_tokens,
            *[self.ratios.get(name, 0.0) for name in RATIO_COLUMNS],
            *[self.hardness_histogram.get(c.value, 0) for c in HardnessCategory],
        ]
        cells = ["" if v is None else str(v) for v in values]
        return "\t".join(columns) + "\n" + "\t".join(cells) + "\n"


def corpus_report(
    corpus: Sequence[OperationTree],
    schema: SchemaGraph,
    questions: dict[str, str] | None = None,
    segment_length: int = 50,
    tokenizer: Tokenizer = tokenize,
    weights: HardnessWeights = HardnessWeights(),
    thresholds: HardnessThresholds = HardnessThresholds(),
) -> CorpusReport:
    """Assemble all corpus metrics; lexical columns are absent without questions."""
    table_cov, attr_cov = coverage(corpus, schema)

    n = len(corpus)
    totals = Counter()
    histogram: Counter = Counter()
    for tree in corpus:
        counts = component_counts(tree)
        totals["joins"] += counts.joins
        totals["group_by"] += counts.group_bys
        totals["having"] += counts.having
        totals["set_op"] += counts.set_ops
        totals["aggregations"] += counts.aggregations
        if tree.root.kind is OperationKind.IS_EMPTY:
            totals["boolean"] += 1
        histogram[hardness(tree, weights, thresholds).category.value] += 1
    ratios = {
        "avg_joins": totals["joins"] / n if n else 0.0,
        "group_by": totals["group_by"] / n if n else 0.0,
        "having": totals["having"] / n if n else 0.0,
        "set_op": totals["set_op"] / n if n else 0.0,
        "aggregations": totals["aggregations"] / n if n else 0.0,
        "boolean": totals["boolean"] / n if n else 0.0,
    }

    msttr_value: float | None = None
    avg_tokens: float | None = None
    if questions:
        token_seqs = [tokenizer(questions[t.id]) for t in corpus if t.id in questions]
        if token_seqs:
            msttr_value = msttr(token_seqs, segment_length)
            avg_tokens = sum(len(s) for s in token_seqs) / len(token_seqs)

    return CorpusReport(
        database=schema.schema_id,
        query_count=n,
        table_coverage=table_cov,
        attribute_coverage=attr_cov,
        msttr=msttr_value,
        avg_tokens=avg_tokens,
        ratios=ratios,
        hardness_histogram={cat.value: histogram.get(cat.value, 0) for cat in HardnessCategory},
        segment_length=segment_length,
    )
