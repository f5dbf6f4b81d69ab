import { describe, expect, it, vi } from "vitest";

import { renderTree } from "../src/treeView.js";
import type { TreeNode } from "../src/types.js";

const tree: TreeNode = {
  op: "Count",
  args: {},
  children: [
    {
      op: "Selection",
      args: { attribute: "movie.budget", comparator: ">=", value: 1000 },
      children: [{ op: "GetData", args: { table: "movie" }, children: [] }],
    },
  ],
};

describe("renderTree", () => {
  it("renders one card per node, root at the top", () => {
    const view = renderTree(tree);
    const cards = view.querySelectorAll(".node-card");
    expect(cards).toHaveLength(3);
    expect(cards[0]!.querySelector(".node-op")!.textContent).toBe("Count");
    expect((cards[0] as HTMLElement).dataset.path).toBe("r");
    expect((cards[2] as HTMLElement).dataset.path).toBe("r.0.0");
  });

  it("shows node arguments and intermediate results", () => {
    const view = renderTree(tree, {
      r: { columns: ["count(*)"], rows: [[3]], truncated: false },
      "r.0.0": { error: "boom" },
    });
    expect(view.textContent).toContain("attribute=movie.budget");
    const rootDrawer = view.querySelector('[data-path="r"] .node-result')!;
    expect(rootDrawer.textContent).toContain("count(*)");
    expect(rootDrawer.textContent).toContain("3");
    const leafDrawer = view.querySelector('[data-path="r.0.0"] .node-result')!;
    expect(leafDrawer.textContent).toContain("error: boom");
  });

  it("renders assigned chips and forwards drops to the reassign hook", () => {
    const onDropToken = vi.fn();
    const view = renderTree(tree, undefined, {
      onDropToken,
      tokensOf: (path) => (path === "r.0" ? [2] : []),
      chipText: (index) => `tok${index}`,
    });
    const chip = view.querySelector('[data-path="r.0"] .chip')!;
    expect(chip.textContent).toBe("tok2");

    const target = view.querySelector('[data-path="r"]')!;
    const drop = new Event("drop", { bubbles: true, cancelable: true }) as DragEvent;
    Object.defineProperty(drop, "dataTransfer", {
      value: { getData: () => JSON.stringify({ tokenIndex: 2, fromPath: "r.0" }) },
    });
    target.dispatchEvent(drop);
    expect(onDropToken).toHaveBeenCalledWith(2, "r.0", "r");
  });
});
