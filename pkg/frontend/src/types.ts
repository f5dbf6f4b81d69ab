/** Wire types for the annotation service API. */

export interface TreeNode {
  op: string;
  args: Record<string, unknown>;
  children: TreeNode[];
  id?: string;
  schema_id?: string;
}

export interface Constraint {
  node_path: string;
  attribute: string;
  comparator: string;
  value: unknown;
}

export interface NodeOrderEntry {
  node_path: string;
  op: string;
  hint: string;
}

export interface NodeResult {
  columns?: string[];
  rows?: unknown[][];
  truncated?: boolean;
  error?: string;
}

export interface Task {
  task_id: string;
  phase: string;
  tree: TreeNode;
  original_tree: TreeNode;
  question: string | null;
  question_tokens: string[] | null;
  assignments: Assignment[] | null;
  phase1_annotator: string | null;
  phase2_annotator: string | null;
  skip_reason: string | null;
  lease: { annotator: string; expires_at: number } | null;
  constraints: Constraint[];
  node_order: NodeOrderEntry[];
  node_results?: Record<string, NodeResult>;
}

export interface Assignment {
  node_path: string;
  token_indices: number[];
}

export interface Suggestion {
  node_path: string;
  token_indices: number[];
}

export interface ExportRecord {
  task_id: string;
  database: string;
  phase: string;
  tree: TreeNode;
  question: { raw: string | null; tokens: string[] };
  token_assignments: Assignment[];
  hardness: { category: string; raw_score: number };
  timing: { phase1_seconds: number | null; phase2_seconds: number | null };
}

export interface ExportPayload {
  records: ExportRecord[];
  report: Record<string, unknown>;
}

export type SkipReason = "nonsensical" | "contradictory" | "other";

export interface ConstraintEdit {
  node_path: string;
  comparator?: string;
  value?: unknown;
}
