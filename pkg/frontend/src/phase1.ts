/**
 * Phase 1 controller: write the question for a sampled operation tree.
 *
 * The annotator sees the tree with its constraints and per-node intermediate
 * results, can adapt constraint comparators/values (the service re-executes
 * and rejects empty adaptations; the rejection surfaces inline), can skip
 * nonsensical trees, and finally submits the question text. All state is a
 * function of the latest service response, so a browser refresh rebuilds the
 * exact same screen.
 */

import { ApiClient, ApiError } from "./api.js";
import type { ConstraintEdit, SkipReason, Task } from "./types.js";

export type Phase1Status = "idle" | "working" | "submitted" | "skipped" | "queue-empty";

export class Phase1Controller {
  task: Task | null = null;
  questionDraft = "";
  inlineError: string | null = null;
  status: Phase1Status = "idle";

  constructor(
    private readonly api: ApiClient,
    readonly annotator: string,
  ) {}

  /** Lease the next pending task and fetch its full view (with node results). */
  async loadNext(): Promise<Task | null> {
    this.inlineError = null;
    const leased = await this.api.nextTask(this.annotator, 1);
    if (leased === null) {
      this.task = null;
      this.status = "queue-empty";
      return null;
    }
    this.task = await this.api.getTask(leased.task_id);
    this.questionDraft = this.task.question ?? "";
    this.status = "working";
    return this.task;
  }

  /** Re-fetch the current task; the screen is reconstructible from this alone. */
  async refresh(): Promise<void> {
    if (this.task) {
      this.task = await this.api.getTask(this.task.task_id);
    }
  }

  /**
   * Change one constraint's comparator and/or value. Structure is immutable:
   * only Selection arguments can change. A rejected adaptation (empty result,
   * type mismatch) leaves the task untouched and sets `inlineError`.
   */
  async editConstraint(edit: ConstraintEdit): Promise<boolean> {
    if (!this.task) throw new Error("no task loaded");
    this.inlineError = null;
    try {
      this.task = await this.api.adaptConstraints(this.task.task_id, this.annotator, [edit]);
      await this.refresh(); // pick up re-executed node results
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        this.inlineError = err.message;
        return false;
      }
      throw err;
    }
  }

  async submitQuestion(): Promise<Task> {
    if (!this.task) throw new Error("no task loaded");
    const text = this.questionDraft.trim();
    if (!text) {
      this.inlineError = "Write the question before submitting.";
      throw new Error(this.inlineError);
    }
    const updated = await this.api.submitQuestion(this.task.task_id, this.annotator, text);
    this.task = updated;
    this.status = "submitted";
    return updated;
  }

  async skip(reason: SkipReason): Promise<Task> {
    if (!this.task) throw new Error("no task loaded");
    const updated = await this.api.skipTask(this.task.task_id, this.annotator, reason);
    this.task = updated;
    this.status = "skipped";
    return updated;
  }
}
