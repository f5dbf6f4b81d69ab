/**
 * Typed client for the annotation service.
 *
 * Every UI state change goes through this client; the UI never invents tree
 * mutations locally, so any screen can be rebuilt from `getTask` alone.
 */

import type {
  Assignment,
  ConstraintEdit,
  ExportPayload,
  SkipReason,
  Suggestion,
  Task,
  TreeNode,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const detail = payload && typeof payload.error === "string" ? payload.error : text;
      throw new ApiError(detail || `HTTP ${response.status}`, response.status);
    }
    return payload as T;
  }

  async createTasks(trees: TreeNode[], idempotencyKey?: string): Promise<string[]> {
    const payload = await this.request<{ task_ids: string[] }>("POST", "/tasks", {
      trees,
      idempotency_key: idempotencyKey ?? null,
    });
    return payload.task_ids;
  }

  async nextTask(annotator: string, phase: 1 | 2): Promise<Task | null> {
    const payload = await this.request<{ task: Task | null }>(
      "GET",
      `/tasks/next?phase=${phase}&annotator=${encodeURIComponent(annotator)}`,
    );
    return payload.task;
  }

  /** Full task view including per-node intermediate results. */
  async getTask(taskId: string): Promise<Task> {
    const payload = await this.request<{ task: Task }>("GET", `/tasks/${taskId}`);
    return payload.task;
  }

  async submitQuestion(taskId: string, annotator: string, question: string): Promise<Task> {
    const payload = await this.request<{ task: Task }>("POST", `/tasks/${taskId}/question`, {
      annotator,
      question,
    });
    return payload.task;
  }

  async adaptConstraints(taskId: string, annotator: string, edits: ConstraintEdit[]): Promise<Task> {
    const payload = await this.request<{ task: Task }>("POST", `/tasks/${taskId}/adapt`, {
      annotator,
      edits,
    });
    return payload.task;
  }

  async skipTask(taskId: string, annotator: string, reason: SkipReason): Promise<Task> {
    const payload = await this.request<{ task: Task }>("POST", `/tasks/${taskId}/skip`, {
      annotator,
      reason,
    });
    return payload.task;
  }

  async prematch(taskId: string): Promise<Suggestion[]> {
    const payload = await this.request<{ suggestions: Suggestion[] }>(
      "GET",
      `/tasks/${taskId}/prematch`,
    );
    return payload.suggestions;
  }

  async submitTokens(
    taskId: string,
    annotator: string,
    correctedQuestion: string,
    assignments: Assignment[],
  ): Promise<Task> {
    const payload = await this.request<{ task: Task }>("POST", `/tasks/${taskId}/tokens`, {
      annotator,
      corrected_question: correctedQuestion,
      assignments,
    });
    return payload.task;
  }

  async exportCorpus(phase?: string): Promise<ExportPayload> {
    const query = phase ? `?phase=${encodeURIComponent(phase)}` : "";
    return this.request<ExportPayload>("GET", `/export${query}`);
  }
}
