/**
 * Phase 2 controller: correct the question, then assign its tokens to the
 * tree's operations.
 *
 * The walk order comes from the service (root first, down the tree), each
 * node carrying its guideline hint. Token chips are position-indexed, so two
 * occurrences of the same word stay distinguishable. A chip may sit on
 * several nodes at once, and nodes may stay empty; the summary lists empty
 * nodes before submit as guidance, not as a gate. Drag-and-drop lands in
 * `reassign`, which the DOM drop handler calls.
 */

import { ApiClient } from "./api.js";
import { tokenize } from "./tokenize.js";
import type { Assignment, NodeOrderEntry, Suggestion, Task } from "./types.js";

export interface TokenChip {
  index: number;
  text: string;
}

export class Phase2Controller {
  task: Task | null = null;
  correctedQuestion = "";
  /** node_path -> set of token positions */
  assignments = new Map<string, Set<number>>();
  walkPosition = 0;
  status: "idle" | "working" | "submitted" | "queue-empty" = "idle";

  constructor(
    private readonly api: ApiClient,
    readonly annotator: string,
  ) {}

  async loadNext(): Promise<Task | null> {
    const leased = await this.api.nextTask(this.annotator, 2);
    if (leased === null) {
      this.task = null;
      this.status = "queue-empty";
      return null;
    }
    this.task = await this.api.getTask(leased.task_id);
    this.correctedQuestion = this.task.question ?? "";
    this.assignments = new Map();
    this.walkPosition = 0;
    this.status = "working";
    return this.task;
  }

  /** Tokens of the (possibly corrected) question, as position-indexed chips. */
  get chips(): TokenChip[] {
    return tokenize(this.correctedQuestion).map((text, index) => ({ index, text }));
  }

  get nodeOrder(): NodeOrderEntry[] {
    return this.task?.node_order ?? [];
  }

  get currentNode(): NodeOrderEntry | null {
    return this.nodeOrder[this.walkPosition] ?? null;
  }

  nextNode(): NodeOrderEntry | null {
    if (this.walkPosition < this.nodeOrder.length - 1) this.walkPosition += 1;
    return this.currentNode;
  }

  previousNode(): NodeOrderEntry | null {
    if (this.walkPosition > 0) this.walkPosition -= 1;
    return this.currentNode;
  }

  /**
   * Replace the question text. Chips re-derive from the new text; assignments
   * pointing past the end of the new token list are dropped.
   */
  correctQuestion(text: string): void {
    this.correctedQuestion = text;
    const limit = this.chips.length;
    for (const indices of this.assignments.values()) {
      for (const index of [...indices]) {
        if (index >= limit) indices.delete(index);
      }
    }
  }

  async fetchPrematch(): Promise<Suggestion[]> {
    if (!this.task) throw new Error("no task loaded");
    return this.api.prematch(this.task.task_id);
  }

  acceptSuggestion(suggestion: Suggestion): void {
    for (const index of suggestion.token_indices) {
      this.assign(index, suggestion.node_path);
    }
  }

  assign(tokenIndex: number, nodePath: string): void {
    if (tokenIndex < 0 || tokenIndex >= this.chips.length) {
      throw new Error(`token ${tokenIndex} out of range`);
    }
    let bucket = this.assignments.get(nodePath);
    if (!bucket) {
      bucket = new Set();
      this.assignments.set(nodePath, bucket);
    }
    bucket.add(tokenIndex);
  }

  unassign(tokenIndex: number, nodePath: string): void {
    this.assignments.get(nodePath)?.delete(tokenIndex);
  }

  /** Drop handler target: move a chip from one node's bucket to another's. */
  reassign(tokenIndex: number, fromPath: string, toPath: string): void {
    this.unassign(tokenIndex, fromPath);
    this.assign(tokenIndex, toPath);
  }

  tokensOf(nodePath: string): number[] {
    return [...(this.assignments.get(nodePath) ?? [])].sort((a, b) => a - b);
  }

  /** Nodes with no tokens yet, in walk order; shown before submit as guidance. */
  emptyNodes(): NodeOrderEntry[] {
    return this.nodeOrder.filter((entry) => this.tokensOf(entry.node_path).length === 0);
  }

  buildAssignments(): Assignment[] {
    return [...this.assignments.entries()]
      .filter(([, indices]) => indices.size > 0)
      .map(([node_path, indices]) => ({
        node_path,
        token_indices: [...indices].sort((a, b) => a - b),
      }))
      .sort((a, b) => a.node_path.localeCompare(b.node_path));
  }

  async submit(): Promise<Task> {
    if (!this.task) throw new Error("no task loaded");
    const updated = await this.api.submitTokens(
      this.task.task_id,
      this.annotator,
      this.correctedQuestion,
      this.buildAssignments(),
    );
    this.task = updated;
    this.status = "submitted";
    return updated;
  }
}
