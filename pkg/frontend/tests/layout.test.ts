import { describe, expect, it } from "vitest";

import { layout, nodeLabel, ranks } from "../src/layout";
import { lenetLike } from "./helpers";

describe("layout", () => {
  it("ranks a chain consecutively", () => {
    const r = ranks(lenetLike());
    expect([...r.values()]).toEqual([0, 1, 2, 3, 4, 5]);
  });

  it("stacks chain boxes top to bottom without overlap", () => {
    const lay = layout(lenetLike());
    expect(lay.boxes).toHaveLength(6);
    const ys = lay.boxes.map((b) => b.y);
    expect([...ys].sort((a, b) => a - b)).toEqual(ys);
    for (let i = 1; i < lay.boxes.length; i++) {
      expect(lay.boxes[i].y).toBeGreaterThanOrEqual(
        lay.boxes[i - 1].y + lay.boxes[i - 1].h,
      );
    }
    expect(lay.edges).toHaveLength(5);
  });

  it("spreads branch siblings horizontally on one row", () => {
    const graph = lenetLike();
    graph.nodes.push({
      id: "nb",
      kind: "Conv2D",
      params: { filters: 16, filter_size: 3 },
      return_seq: false,
    });
    graph.edges.push(["n0", "nb"], ["nb", "n2"]);
    const lay = layout(graph);
    const conv = lay.boxes.find((b) => b.id === "n1")!;
    const branch = lay.boxes.find((b) => b.id === "nb")!;
    expect(branch.y).toBe(conv.y);
    const noOverlap =
      branch.x >= conv.x + conv.w || conv.x >= branch.x + branch.w;
    expect(noOverlap).toBe(true);
  });

  it("labels nodes like the server renderer", () => {
    const graph = lenetLike();
    expect(nodeLabel(graph.nodes[1])).toBe("Conv2D(32,5)");
    expect(nodeLabel(graph.nodes[0])).toBe("InputMNIST");
    expect(
      nodeLabel({ id: "x", kind: "LSTM", params: { nodes: 25 }, return_seq: true }),
    ).toBe("LSTM(25,seq)");
  });

  it("keeps every box inside the reported canvas", () => {
    const lay = layout(lenetLike());
    for (const box of lay.boxes) {
      expect(box.x).toBeGreaterThanOrEqual(0);
      expect(box.y).toBeGreaterThanOrEqual(0);
      expect(box.x + box.w).toBeLessThanOrEqual(lay.width);
      expect(box.y + box.h).toBeLessThanOrEqual(lay.height);
    }
  });
});
