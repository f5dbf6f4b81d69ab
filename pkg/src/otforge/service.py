"""Two-phase annotation workflow over a persistent task store.

Each sampled tree becomes a task. In phase 1 an annotator writes the natural
language question for the tree (adapting or skipping nonsensical constraint
draws); in phase 2 a *different* annotator corrects the question and assigns
its tokens to the tree's operations. Tasks move along a fixed state machine:

    Phase1Pending -> Phase1Done | Skipped
    Phase1Done    -> Phase2Pending          (immediate when token assignment is on)
    Phase2Pending -> Phase2Done

All transitions are single transactions against an embedded SQLite store, and
work is handed out under time-bounded leases so no task is double-assigned.
The store persists its bound schema, so exports can run without the original
database on hand.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
import time
import uuid
from dataclasses import replace
from enum import Enum
from typing import Callable

from otforge import treeio
from otforge.analysis import corpus_report, hardness, tokenize
from otforge.schema import SchemaGraph
from otforge.sqlgen import (
    ExecutionError,
    NodeError,
    UnsupportedNodeError,
    execute,
    intermediate_results,
)
from otforge.trees import (
    OperationKind,
    OperationTree,
    iter_nodes,
    node_at,
    replace_node,
    selections_in,
    validate,
)


class ServiceError(Exception):
    status = 400


class TaskNotFound(ServiceError):
    status = 404


class LeaseError(ServiceError):
    status = 409


class StateError(ServiceError):
    status = 409


class IdempotencyError(ServiceError):
    status = 409


class InvalidRequest(ServiceError):
    status = 422


class TaskPhase(str, Enum):
    PHASE1_PENDING = "Phase1Pending"
    PHASE1_DONE = "Phase1Done"
    PHASE2_PENDING = "Phase2Pending"
    PHASE2_DONE = "Phase2Done"
    SKIPPED = "Skipped"


SKIP_REASONS = ("nonsensical", "contradictory", "other")

#: per-node-kind guidance shown during token assignment; advice, not validation.
GUIDELINE_HINTS: dict[str, str] = {
    "GetData": (
        "Pick the words naming this table's entity (for a bridge table, the words "
        "expressing the relationship it represents)."
    ),
    "Join": "Pick the words that express the connection between the joined entities, as for a bridge table.",
    "Selection": "Pick the words that state this constraint, including the value itself.",
    "Union": "Pick the words combining the two alternatives (e.g. 'or', 'either').",
    "Intersect": "Pick the words requiring both conditions at once (e.g. 'both', 'and').",
    "Diff": "Pick the words excluding the second condition (e.g. 'without', 'except').",
    "Min": "Pick the words asking for the smallest/lowest/earliest.",
    "Max": "Pick the words asking for the largest/highest/latest.",
    "GroupBy": "Pick the words that express the per-group aggregation (e.g. 'per', 'for each').",
    "Projection": "Pick the words naming what should be returned.",
    "Distinct": "Pick the words asking for different/unique results.",
    "Count": "Pick the words that trigger counting (e.g. 'how', 'many').",
    "Sum": "Pick the words that trigger summing (e.g. 'total').",
    "Average": "Pick the words that trigger averaging (e.g. 'average', 'mean').",
    "IsEmpty": "Pick the words making this a yes/no question (e.g. 'is', 'are', 'does').",
    "Done": "Usually carries no tokens.",
}

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS tasks (
    task_id TEXT PRIMARY KEY,
    tree TEXT NOT NULL,
    original_tree TEXT NOT NULL,
    phase TEXT NOT NULL,
    question TEXT,
    question_tokens TEXT,
    assignments TEXT,
    phase1_annotator TEXT,
    phase2_annotator TEXT,
    lease_annotator TEXT,
    lease_expires REAL,
    lease_started REAL,
    created_at REAL NOT NULL,
    phase1_seconds REAL,
    phase2_seconds REAL,
    skip_reason TEXT
);
CREATE TABLE IF NOT EXISTS batches (
    idempotency_key TEXT PRIMARY KEY,
    payload_digest TEXT NOT NULL,
    task_ids TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


class TaskStore:
    """Annotation task queue with leasing; one instance per store database.

    ``clock`` is injectable so lease expiry is testable. All public methods
    are safe to call from multiple threads.
    """

    def __init__(
        self,
        store_path: str = ":memory:",
        schema: SchemaGraph | None = None,
        data_source: str | None = None,
        lease_ttl: float = 1800.0,
        row_cap: int = 50,
        token_assignment: bool = True,
        clock: Callable[[], float] = time.time,
    ):
        self._conn = sqlite3.connect(store_path, check_same_thread=False)
        self._lock = threading.RLock()
        self._clock = clock
        self.lease_ttl = lease_ttl
        self.row_cap = row_cap
        with self._lock:
            self._conn.executescript(_SCHEMA_SQL)
            if schema is not None:
                self._set_meta("schema", json.dumps(schema.to_dict()))
                self._set_meta("token_assignment", "1" if token_assignment else "0")
                if data_source is not None:
                    self._set_meta("data_source", data_source)
            self._conn.commit()
        stored_schema = self._get_meta("schema")
        if stored_schema is None:
            raise ServiceError("store has no schema; pass one when creating it")
        self.schema = SchemaGraph.from_dict(json.loads(stored_schema))
        self.token_assignment = self._get_meta("token_assignment") != "0"
        self.data_source = data_source or self._get_meta("data_source")

    def close(self) -> None:
        self._conn.close()

    def _set_meta(self, key: str, value: str) -> None:
        self._conn.execute("INSERT OR REPLACE INTO meta (key, value) VALUES (?, ?)", (key, value))

    def _get_meta(self, key: str) -> str | None:
        row = self._conn.execute("SELECT value FROM meta WHERE key = ?", (key,)).fetchone()
        return row[0] if row else None

    # -- task creation ---------------------------------------------------

    def create_tasks(self, trees: list[OperationTree], idempotency_key: str | None = None) -> list[str]:
        """One Phase1Pending task per tree; idempotent on (key, payload)."""
        serialized = [treeio.serialize(t) for t in trees]
        for tree, record in zip(trees, serialized):
            result = validate(tree, self.schema)
            if not result.ok:
                v = result.violations[0]
                raise InvalidRequest(f"tree {tree.id!r} invalid at {v.node_path}: {v.message}")
        digest = hashlib.sha1("\n".join(serialized).encode()).hexdigest()
        with self._lock:
            if idempotency_key is not None:
                row = self._conn.execute(
                    "SELECT payload_digest, task_ids FROM batches WHERE idempotency_key = ?",
                    (idempotency_key,),
                ).fetchone()
                if row is not None:
                    if row[0] != digest:
                        raise IdempotencyError(f"idempotency key {idempotency_key!r} was used with a different payload")
                    return json.loads(row[1])
            now = self._clock()
            ids = []
            for record in serialized:
                task_id = f"t{uuid.uuid4().hex[:12]}"
                self._conn.execute(
                    "INSERT INTO tasks (task_id, tree, original_tree, phase, created_at) VALUES (?, ?, ?, ?, ?)",
                    (task_id, record, record, TaskPhase.PHASE1_PENDING.value, now),
                )
                ids.append(task_id)
            if idempotency_key is not None:
                self._conn.execute(
                    "INSERT INTO batches (idempotency_key, payload_digest, task_ids) VALUES (?, ?, ?)",
                    (idempotency_key, digest, json.dumps(ids)),
                )
            self._conn.commit()
            return ids

    # -- queue -----------------------------------------------------------

    def next_task(self, annotator: str, phase: int) -> dict | None:
        """Lease the next pending task of the requested phase, or None.

        Never hands an annotator a phase-2 task whose question they wrote in
        phase 1. An annotator already holding a live lease in this phase gets
        that same task back (with the lease renewed).
        """
        if phase not in (1, 2):
            raise InvalidRequest("phase must be 1 or 2")
        if not annotator:
            raise InvalidRequest("annotator is required")
        state = TaskPhase.PHASE1_PENDING if phase == 1 else TaskPhase.PHASE2_PENDING
        with self._lock:
            now = self._clock()
            held = self._conn.execute(
                "SELECT task_id FROM tasks WHERE phase = ? AND lease_annotator = ? AND lease_expires > ? "
                "ORDER BY task_id LIMIT 1",
                (state.value, annotator, now),
            ).fetchone()
            if held is not None:
                self._conn.execute(
                    "UPDATE tasks SET lease_expires = ? WHERE task_id = ?",
                    (now + self.lease_ttl, held[0]),
                )
                self._conn.commit()
                return self.task_payload(held[0])
            row = self._conn.execute(
                "SELECT task_id FROM tasks WHERE phase = ? "
                "AND (lease_annotator IS NULL OR lease_expires <= ?) "
                "AND (? = 1 OR phase1_annotator IS NULL OR phase1_annotator != ?) "
                "ORDER BY task_id LIMIT 1",
                (state.value, now, phase, annotator),
            ).fetchone()
            if row is None:
                return None
            self._conn.execute(
                "UPDATE tasks SET lease_annotator = ?, lease_expires = ?, lease_started = ? WHERE task_id = ?",
                (annotator, now + self.lease_ttl, now, row[0]),
            )
            self._conn.commit()
            return self.task_payload(row[0])

    def _fetch(self, task_id: str) -> sqlite3.Row:
        self._conn.row_factory = sqlite3.Row
        row = self._conn.execute("SELECT * FROM tasks WHERE task_id = ?", (task_id,)).fetchone()
        self._conn.row_factory = None
        if row is None:
            raise TaskNotFound(f"no task {task_id!r}")
        return row

    def _require_lease(self, row: sqlite3.Row, annotator: str) -> float:
        """Returns the lease start time for timing capture."""
        now = self._clock()
        if row["lease_annotator"] != annotator or (row["lease_expires"] or 0) <= now:
            raise LeaseError(f"annotator {annotator!r} holds no live lease on {row['task_id']}")
        return row["lease_started"]

    def _require_phase(self, row: sqlite3.Row, expected: TaskPhase) -> None:
        if row["phase"] != expected.value:
            raise StateError(f"task {row['task_id']} is {row['phase']}, needs {expected.value}")

    # -- phase 1 -----------------------------------------------------------

    def submit_question(self, task_id: str, annotator: str, question: str) -> dict:
        """Store the phase-1 question; the task becomes ready for token assignment."""
        if not question or not question.strip():
            raise InvalidRequest("question must not be empty")
        with self._lock:
            row = self._fetch(task_id)
            self._require_phase(row, TaskPhase.PHASE1_PENDING)
            lease_started = self._require_lease(row, annotator)
            tokens = tokenize(question)
            next_phase = TaskPhase.PHASE2_PENDING if self.token_assignment else TaskPhase.PHASE1_DONE
            self._conn.execute(
                "UPDATE tasks SET phase = ?, question = ?, question_tokens = ?, phase1_annotator = ?, "
                "phase1_seconds = ?, lease_annotator = NULL, lease_expires = NULL, lease_started = NULL "
                "WHERE task_id = ?",
                (next_phase.value, question, json.dumps(tokens), annotator,
                 self._clock() - lease_started, task_id),
            )
            self._conn.commit()
            return self.task_payload(task_id)

    def adapt_constraints(self, task_id: str, annotator: str, edits: list[dict]) -> dict:
        """Change Selection comparators/values; structure is immutable.

        The adapted tree must re-validate and re-execute with a non-empty
        result, otherwise the adaptation is rejected wholesale.
        """
        if not edits:
            raise InvalidRequest("no edits given")
        with self._lock:
            row = self._fetch(task_id)
            self._require_phase(row, TaskPhase.PHASE1_PENDING)
            self._require_lease(row, annotator)
            tree = treeio.parse(row["tree"])
            root = tree.root
            for edit in edits:
                path = edit.get("node_path")
                if not path:
                    raise InvalidRequest("edit is missing node_path")
                try:
                    node = node_at(root, path)
                except KeyError:
                    raise InvalidRequest(f"unknown node path {path!r}")
                if node.kind is not OperationKind.SELECTION:
                    raise InvalidRequest(f"node {path} is {node.kind.value}; only Selection constraints are editable")
                unknown = set(edit) - {"node_path", "comparator", "value"}
                if unknown:
                    raise InvalidRequest(f"edits may only change comparator/value, got {sorted(unknown)}")
                changes = {}
                if "comparator" in edit:
                    changes["comparator"] = edit["comparator"]
                if "value" in edit:
                    changes["value"] = edit["value"]
                if not changes:
                    raise InvalidRequest(f"edit for {path} changes nothing")
                root = replace_node(root, path, replace(node, **changes))
            adapted = tree.with_root(root)
            result = validate(adapted, self.schema)
            if not result.ok:
                v = result.violations[0]
                raise InvalidRequest(f"adaptation invalid at {v.node_path}: {v.message}")
            if self.data_source is None:
                raise ServiceError("store has no data source; cannot re-execute adaptations")
            try:
                rs = execute(adapted, self.data_source, self.schema, row_cap=1)
            except (ExecutionError, UnsupportedNodeError) as exc:
                raise InvalidRequest(f"adaptation does not execute: {exc}")
            if not rs.rows or (len(rs.rows) == 1 and len(rs.columns) == 1 and rs.rows[0][0] is None):
                raise InvalidRequest("adaptation yields an empty result")
            self._conn.execute(
                "UPDATE tasks SET tree = ? WHERE task_id = ?",
                (treeio.serialize(adapted), task_id),
            )
            self._conn.commit()
            return self.task_payload(task_id)

    def skip_task(self, task_id: str, annotator: str, reason: str) -> dict:
        if reason not in SKIP_REASONS:
            raise InvalidRequest(f"skip reason must be one of {SKIP_REASONS}")
        with self._lock:
            row = self._fetch(task_id)
            self._require_phase(row, TaskPhase.PHASE1_PENDING)
            self._require_lease(row, annotator)
            self._conn.execute(
                "UPDATE tasks SET phase = ?, skip_reason = ?, phase1_annotator = ?, "
                "lease_annotator = NULL, lease_expires = NULL, lease_started = NULL WHERE task_id = ?",
                (TaskPhase.SKIPPED.value, reason, annotator, task_id),
            )
            self._conn.commit()
            return self.task_payload(task_id)

    # -- phase 2 -----------------------------------------------------------

    def prematch_tokens(self, task_id: str) -> list[dict]:
        """Suggest token spans per Selection by simple string matching.

        The constraint value is tokenized like the question; every contiguous
        occurrence of its token sequence becomes a suggestion. Suggestions
        only; the annotator confirms or edits.
        """
        with self._lock:
            row = self._fetch(task_id)
            self._require_phase(row, TaskPhase.PHASE2_PENDING)
            tree = treeio.parse(row["tree"])
            tokens = json.loads(row["question_tokens"] or "[]")
        suggestions = []
        for path, node in selections_in(tree.root):
            value_tokens = tokenize(str(node.value))
            spans = []
            if value_tokens and tokens:
                width = len(value_tokens)
                for start in range(0, len(tokens) - width + 1):
                    if tokens[start:start + width] == value_tokens:
                        spans.append(list(range(start, start + width)))
            for span in spans:
                suggestions.append({"node_path": path, "token_indices": span})
        return suggestions

    def submit_token_assignment(
        self,
        task_id: str,
        annotator: str,
        corrected_question: str,
        assignments: list[dict],
    ) -> dict:
        """Store the corrected question and final token assignments; task becomes exportable."""
        if not corrected_question or not corrected_question.strip():
            raise InvalidRequest("corrected question must not be empty")
        with self._lock:
            row = self._fetch(task_id)
            self._require_phase(row, TaskPhase.PHASE2_PENDING)
            lease_started = self._require_lease(row, annotator)
            if row["phase1_annotator"] == annotator:
                raise StateError("phase 2 must be done by a different annotator than phase 1")
            tree = treeio.parse(row["tree"])
            tokens = tokenize(corrected_question)
            cleaned = []
            for assignment in assignments:
                path = assignment.get("node_path")
                indices = assignment.get("token_indices", [])
                try:
                    node_at(tree.root, path or "")
                except KeyError:
                    raise InvalidRequest(f"unknown node path {path!r}")
                for index in indices:
                    if not isinstance(index, int) or not 0 <= index < len(tokens):
                        raise InvalidRequest(f"token index {index!r} out of range for a {len(tokens)}-token question")
                cleaned.append({"node_path": path, "token_indices": list(indices)})
            self._conn.execute(
                "UPDATE tasks SET phase = ?, question = ?, question_tokens = ?, assignments = ?, "
                "phase2_annotator = ?, phase2_seconds = ?, "
                "lease_annotator = NULL, lease_expires = NULL, lease_started = NULL WHERE task_id = ?",
                (TaskPhase.PHASE2_DONE.value, corrected_question, json.dumps(tokens), json.dumps(cleaned),
                 annotator, self._clock() - lease_started, task_id),
            )
            self._conn.commit()
            return self.task_payload(task_id)

    # -- reads and export ----------------------------------------------------

    def task_payload(self, task_id: str, include_results: bool = False) -> dict:
        """JSON-ready view of one task; optionally with per-node intermediate results."""
        with self._lock:
            row = self._fetch(task_id)
        tree = treeio.parse(row["tree"])
        payload = {
            "task_id": row["task_id"],
            "phase": row["phase"],
            "tree": json.loads(row["tree"]),
            "original_tree": json.loads(row["original_tree"]),
            "question": row["question"],
            "question_tokens": json.loads(row["question_tokens"]) if row["question_tokens"] else None,
            "assignments": json.loads(row["assignments"]) if row["assignments"] else None,
            "phase1_annotator": row["phase1_annotator"],
            "phase2_annotator": row["phase2_annotator"],
            "skip_reason": row["skip_reason"],
            "lease": (
                {"annotator": row["lease_annotator"], "expires_at": row["lease_expires"]}
                if row["lease_annotator"] and (row["lease_expires"] or 0) > self._clock()
                else None
            ),
            "constraints": [
                {
                    "node_path": path,
                    "attribute": node.attribute,
                    "comparator": node.comparator,
                    "value": node.value,
                }
                for path, node in selections_in(tree.root)
            ],
            # phase-2 tooling walks nodes root-first in this order
            "node_order": [
                {"node_path": path, "op": node.kind.value, "hint": GUIDELINE_HINTS[node.kind.value]}
                for path, node in iter_nodes(tree.root)
            ],
        }
        if include_results:
            payload["node_results"] = self.node_results(task_id)
        return payload

    def node_results(self, task_id: str) -> dict[str, dict]:
        """Row-capped intermediate result per node; per-node errors don't abort."""
        with self._lock:
            row = self._fetch(task_id)
        if self.data_source is None:
            raise ServiceError("store has no data source; cannot execute trees")
        tree = treeio.parse(row["tree"])
        results = intermediate_results(tree, self.data_source, self.schema, row_cap=self.row_cap)
        out = {}
        for path, value in results.items():
            if isinstance(value, NodeError):
                out[path] = {"error": value.message}
            else:
                out[path] = {
                    "columns": list(value.columns),
                    "rows": [list(r) for r in value.rows],
                    "truncated": value.truncated,
                }
        return out

    def export(self, phase: str | None = None) -> tuple[list[dict], dict]:
        """Finished records (deterministic task_id order) plus the corpus report.

        Only Phase2Done tasks export; Phase1Done counts as finished when the
        store runs with token assignment disabled.
        """
        exportable = {TaskPhase.PHASE2_DONE.value}
        if not self.token_assignment:
            exportable.add(TaskPhase.PHASE1_DONE.value)
        if phase is not None:
            if phase not in {p.value for p in TaskPhase}:
                raise InvalidRequest(f"unknown phase {phase!r}")
            exportable &= {phase}
        with self._lock:
            self._conn.row_factory = sqlite3.Row
            rows = self._conn.execute("SELECT * FROM tasks ORDER BY task_id").fetchall()
            self._conn.row_factory = None

        records = []
        trees = []
        questions: dict[str, str] = {}
        p1_times: list[float] = []
        p2_times: list[float] = []
        for row in rows:
            if row["phase"] not in exportable:
                continue
            tree = treeio.parse(row["tree"])
            trees.append(tree)
            if row["question"]:
                questions[tree.id] = row["question"]
            h = hardness(tree)
            if row["phase1_seconds"] is not None:
                p1_times.append(row["phase1_seconds"])
            if row["phase2_seconds"] is not None:
                p2_times.append(row["phase2_seconds"])
            records.append(
                {
                    "task_id": row["task_id"],
                    "database": self.schema.schema_id,
                    "phase": row["phase"],
                    "tree": json.loads(row["tree"]),
                    "question": {
                        "raw": row["question"],
                        "tokens": json.loads(row["question_tokens"]) if row["question_tokens"] else [],
                    },
                    "token_assignments": json.loads(row["assignments"]) if row["assignments"] else [],
                    "hardness": {"category": h.category.value, "raw_score": h.raw_score},
                    "timing": {
                        "phase1_seconds": row["phase1_seconds"],
                        "phase2_seconds": row["phase2_seconds"],
                    },
                }
            )
        report = corpus_report(trees, self.schema, questions)
        report.avg_phase1_seconds = sum(p1_times) / len(p1_times) if p1_times else None
        report.avg_phase2_seconds = sum(p2_times) / len(p2_times) if p2_times else None
        return records, report.to_dict()
