/**
 * Browser bootstrap: wires the phase controllers to the DOM.
 *
 * The session starts from the URL: ?annotator=NAME&phase=1|2&api=http://...
 * Everything shown derives from API responses; reloading the page re-leases
 * the same task and rebuilds the identical screen.
 */

import { ApiClient } from "./api.js";
import { Phase1Controller } from "./phase1.js";
import { Phase2Controller } from "./phase2.js";
import { renderTree } from "./treeView.js";
import type { SkipReason, Suggestion } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function banner(message: string): HTMLElement {
  return el("p", "banner", message);
}

async function phase1Screen(root: HTMLElement, controller: Phase1Controller): Promise<void> {
  root.replaceChildren();
  const task = controller.task;
  if (!task) {
    root.append(banner("No phase-1 task pending. Come back later."));
    return;
  }
  root.append(el("h2", undefined, `Write the question (${task.task_id})`));

  if (controller.inlineError) {
    root.append(el("p", "inline-error", controller.inlineError));
  }

  root.append(renderTree(task.tree, task.node_results));

  const constraintsPanel = el("div", "constraints");
  constraintsPanel.append(el("h3", undefined, "Constraints"));
  for (const constraint of task.constraints) {
    const row = el("div", "constraint-row");
    row.append(el("span", undefined, `${constraint.attribute} ${constraint.comparator} `));
    const input = el("input") as HTMLInputElement;
    input.value = String(constraint.value);
    const apply = el("button", undefined, "apply");
    apply.addEventListener("click", async () => {
      const raw = input.value;
      const value = typeof constraint.value === "number" && !Number.isNaN(Number(raw)) ? Number(raw) : raw;
      const accepted = await controller.editConstraint({ node_path: constraint.node_path, value });
      await phase1Screen(root, controller); // rejected edits surface inline
      if (!accepted) input.focus();
    });
    row.append(input, apply);
    constraintsPanel.append(row);
  }
  root.append(constraintsPanel);

  const editor = el("div", "question-editor");
  const textarea = el("textarea") as HTMLTextAreaElement;
  textarea.placeholder = "Write the natural-language question this tree answers...";
  textarea.value = controller.questionDraft;
  textarea.addEventListener("input", () => (controller.questionDraft = textarea.value));
  const submit = el("button", "primary", "Submit question");
  submit.addEventListener("click", async () => {
    try {
      await controller.submitQuestion();
      await controller.loadNext();
      await phase1Screen(root, controller);
    } catch {
      await phase1Screen(root, controller);
    }
  });
  const skipWrap = el("div", "skip-row");
  for (const reason of ["nonsensical", "contradictory", "other"] as SkipReason[]) {
    const button = el("button", undefined, `skip: ${reason}`);
    button.addEventListener("click", async () => {
      await controller.skip(reason);
      await controller.loadNext();
      await phase1Screen(root, controller);
    });
    skipWrap.append(button);
  }
  editor.append(textarea, submit, skipWrap);
  root.append(editor);
}

async function phase2Screen(root: HTMLElement, controller: Phase2Controller): Promise<void> {
  root.replaceChildren();
  const task = controller.task;
  if (!task) {
    root.append(banner("No phase-2 task pending."));
    return;
  }
  root.append(el("h2", undefined, `Assign tokens (${task.task_id})`));

  const editor = el("div", "question-editor");
  const input = el("input") as HTMLInputElement;
  input.value = controller.correctedQuestion;
  input.addEventListener("change", () => {
    controller.correctQuestion(input.value);
    void phase2Screen(root, controller);
  });
  editor.append(el("label", undefined, "Question (correct if needed): "), input);
  root.append(editor);

  const chipTray = el("div", "chip-tray");
  for (const chip of controller.chips) {
    const chipEl = el("span", "chip", chip.text);
    chipEl.title = `token ${chip.index}`;
    chipEl.draggable = true;
    chipEl.addEventListener("dragstart", (event) => {
      event.dataTransfer?.setData("text/plain", JSON.stringify({ tokenIndex: chip.index, fromPath: "" }));
    });
    chipTray.append(chipEl);
  }
  root.append(chipTray);

  const guide = el("div", "node-guide");
  const current = controller.currentNode;
  if (current) {
    guide.append(
      el("h3", undefined, `Node ${controller.walkPosition + 1}/${controller.nodeOrder.length}: ${current.op}`),
      el("p", "hint", current.hint),
    );
    const nav = el("div", "nav-row");
    const back = el("button", undefined, "previous node");
    back.addEventListener("click", () => {
      controller.previousNode();
      void phase2Screen(root, controller);
    });
    const forward = el("button", undefined, "next node");
    forward.addEventListener("click", () => {
      controller.nextNode();
      void phase2Screen(root, controller);
    });
    nav.append(back, forward);
    guide.append(nav);
  }
  root.append(guide);

  root.append(
    renderTree(task.tree, task.node_results, {
      tokensOf: (path) => controller.tokensOf(path),
      chipText: (index) => controller.chips[index]?.text ?? String(index),
      onDropToken: (tokenIndex, fromPath, toPath) => {
        if (fromPath) controller.reassign(tokenIndex, fromPath, toPath);
        else controller.assign(tokenIndex, toPath);
        void phase2Screen(root, controller);
      },
      onRemoveToken: (tokenIndex, path) => {
        controller.unassign(tokenIndex, path);
        void phase2Screen(root, controller);
      },
    }),
  );

  const prematchButton = el("button", undefined, "Load suggestions");
  prematchButton.addEventListener("click", async () => {
    const suggestions: Suggestion[] = await controller.fetchPrematch();
    suggestions.forEach((s) => controller.acceptSuggestion(s));
    await phase2Screen(root, controller);
  });

  const summary = el("div", "summary");
  const empty = controller.emptyNodes();
  if (empty.length) {
    summary.append(
      el("p", "hint", `Nodes without tokens (fine, but double-check): ${empty.map((e) => e.op).join(", ")}`),
    );
  }
  const submit = el("button", "primary", "Submit assignment");
  submit.addEventListener("click", async () => {
    await controller.submit();
    await controller.loadNext();
    await phase2Screen(root, controller);
  });
  root.append(prematchButton, summary, submit);
}

export async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator") ?? "anonymous";
  const phase = params.get("phase") === "2" ? 2 : 1;
  const apiBase = params.get("api") ?? "http://127.0.0.1:8040";
  const api = new ApiClient(apiBase);
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  if (phase === 1) {
    const controller = new Phase1Controller(api, annotator);
    await controller.loadNext();
    await phase1Screen(root, controller);
  } else {
    const controller = new Phase2Controller(api, annotator);
    await controller.loadNext();
    await phase2Screen(root, controller);
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("app")) {
  void start();
}
