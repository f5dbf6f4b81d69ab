/**
 * Tree rendering: top-down layered view, root at the top, one card per
 * operation node with an expandable drawer for its intermediate result.
 */

import type { NodeResult, TreeNode } from "./types.js";

export interface NodeCardHooks {
  /** Called when a chip is dropped on a node card (phase 2). */
  onDropToken?: (tokenIndex: number, fromPath: string, toPath: string) => void;
  /** Tokens currently assigned to a node, rendered as removable chips. */
  tokensOf?: (nodePath: string) => number[];
  chipText?: (tokenIndex: number) => string;
  onRemoveToken?: (tokenIndex: number, nodePath: string) => void;
}

function describeArgs(node: TreeNode): string {
  const parts = Object.entries(node.args).map(([key, value]) => {
    const shown = Array.isArray(value) ? value.join(", ") : String(value);
    return `${key}=${shown}`;
  });
  return parts.join("  ");
}

function resultDrawer(path: string, results: Record<string, NodeResult> | undefined): HTMLElement {
  const drawer = document.createElement("details");
  drawer.className = "node-result";
  const summary = document.createElement("summary");
  summary.textContent = "result";
  drawer.append(summary);
  const body = document.createElement("div");
  const result = results?.[path];
  if (!result) {
    body.textContent = "(not loaded)";
  } else if (result.error) {
    body.textContent = `error: ${result.error}`;
    body.className = "node-result-error";
  } else {
    const table = document.createElement("table");
    const head = document.createElement("tr");
    for (const column of result.columns ?? []) {
      const th = document.createElement("th");
      th.textContent = column;
      head.append(th);
    }
    table.append(head);
    for (const row of result.rows ?? []) {
      const tr = document.createElement("tr");
      for (const cell of row) {
        const td = document.createElement("td");
        td.textContent = cell === null ? "NULL" : String(cell);
        tr.append(td);
      }
      table.append(tr);
    }
    body.append(table);
    if (result.truncated) {
      const note = document.createElement("p");
      note.textContent = "(truncated)";
      body.append(note);
    }
  }
  drawer.append(body);
  return drawer;
}

export function renderTree(
  root: TreeNode,
  results?: Record<string, NodeResult>,
  hooks: NodeCardHooks = {},
): HTMLElement {
  const container = document.createElement("div");
  container.className = "tree-view";

  const renderNode = (node: TreeNode, path: string): HTMLElement => {
    const wrapper = document.createElement("div");
    wrapper.className = "tree-node";

    const card = document.createElement("div");
    card.className = "node-card";
    card.dataset.path = path;

    const title = document.createElement("span");
    title.className = "node-op";
    title.textContent = node.op;
    card.append(title);

    const args = describeArgs(node);
    if (args) {
      const argsEl = document.createElement("span");
      argsEl.className = "node-args";
      argsEl.textContent = args;
      card.append(argsEl);
    }

    if (hooks.tokensOf) {
      const chipRow = document.createElement("span");
      chipRow.className = "node-chips";
      for (const index of hooks.tokensOf(path)) {
        const chip = document.createElement("span");
        chip.className = "chip chip-assigned";
        chip.textContent = hooks.chipText ? hooks.chipText(index) : String(index);
        chip.draggable = true;
        chip.addEventListener("dragstart", (event) => {
          event.dataTransfer?.setData("text/plain", JSON.stringify({ tokenIndex: index, fromPath: path }));
        });
        chip.addEventListener("dblclick", () => hooks.onRemoveToken?.(index, path));
        chipRow.append(chip);
      }
      card.append(chipRow);
    }

    if (hooks.onDropToken) {
      card.addEventListener("dragover", (event) => event.preventDefault());
      card.addEventListener("drop", (event) => {
        event.preventDefault();
        const raw = event.dataTransfer?.getData("text/plain");
        if (!raw) return;
        const { tokenIndex, fromPath } = JSON.parse(raw) as { tokenIndex: number; fromPath: string };
        hooks.onDropToken?.(tokenIndex, fromPath, path);
      });
    }

    card.append(resultDrawer(path, results));
    wrapper.append(card);

    if (node.children.length) {
      const childRow = document.createElement("div");
      childRow.className = "tree-children";
      node.children.forEach((child, index) => {
        childRow.append(renderNode(child, `${path}.${index}`));
      });
      wrapper.append(childRow);
    }
    return wrapper;
  };

  container.append(renderNode(root, "r"));
  return container;
}
