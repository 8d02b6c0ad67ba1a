/** Canvas layout that mirrors the server renderer's monochrome style:
 * nodes stack top-to-bottom by topological rank, branches spread
 * horizontally, edges run between box centers. */

import type { GraphDoc } from "./types";

export interface Box {
  id: string;
  x: number;
  y: number;
  w: number;
  h: number;
  label: string;
}

export interface EdgePath {
  src: string;
  dst: string;
  points: [number, number][];
}

export interface Layout {
  width: number;
  height: number;
  boxes: Box[];
  edges: EdgePath[];
}

const NODE_H = 32;
const MIN_NODE_W = 70;
const CHAR_W = 9;
const VGAP = 38;
const MARGIN = 30;
const HGAP = 24;

export function nodeLabel(node: GraphDoc["nodes"][number]): string {
  const values = Object.values(node.params);
  const parts = values.map(String);
  if (node.return_seq) parts.push("seq");
  return parts.length ? `${node.kind}(${parts.join(",")})` : node.kind;
}

/** Longest-path rank per node; orphan nodes land at rank 0. */
export function ranks(graph: GraphDoc): Map<string, number> {
  const rank = new Map<string, number>();
  for (const n of graph.nodes) rank.set(n.id, 0);
  // relax edges |V| times; cycles simply stop improving
  for (let pass = 0; pass < graph.nodes.length; pass++) {
    let changed = false;
    for (const [src, dst] of graph.edges) {
      const candidate = (rank.get(src) ?? 0) + 1;
      if (candidate > (rank.get(dst) ?? 0) && candidate <= graph.nodes.length) {
        rank.set(dst, candidate);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return rank;
}

export function layout(graph: GraphDoc): Layout {
  const rank = ranks(graph);
  const rows = new Map<number, string[]>();
  for (const n of graph.nodes) {
    const r = rank.get(n.id) ?? 0;
    if (!rows.has(r)) rows.set(r, []);
    rows.get(r)!.push(n.id);
  }

  const boxes: Box[] = [];
  const byId = new Map(graph.nodes.map((n) => [n.id, n]));
  let width = 2 * MARGIN;
  for (const [r, ids] of [...rows.entries()].sort((a, b) => a[0] - b[0])) {
    const widths = ids.map((id) =>
      Math.max(MIN_NODE_W, nodeLabel(byId.get(id)!).length * CHAR_W + 20),
    );
    const total = widths.reduce((a, b) => a + b, 0) + HGAP * (ids.length - 1);
    width = Math.max(width, total + 2 * MARGIN);
    let x = MARGIN;
    ids.forEach((id, i) => {
      boxes.push({
        id,
        x,
        y: MARGIN + r * (NODE_H + VGAP),
        w: widths[i],
        h: NODE_H,
        label: nodeLabel(byId.get(id)!),
      });
      x += widths[i] + HGAP;
    });
  }
  // center each row
  for (const [r, ids] of rows.entries()) {
    const row = boxes.filter((b) => ids.includes(b.id));
    const rowRight = Math.max(...row.map((b) => b.x + b.w));
    const shift = (width - MARGIN - rowRight) / 2;
    for (const b of row) b.x += shift;
  }

  const boxById = new Map(boxes.map((b) => [b.id, b]));
  const edges: EdgePath[] = graph.edges
    .filter(([s, d]) => boxById.has(s) && boxById.has(d))
    .map(([src, dst]) => {
      const a = boxById.get(src)!;
      const b = boxById.get(dst)!;
      return {
        src,
        dst,
        points: [
          [a.x + a.w / 2, a.y + a.h],
          [b.x + b.w / 2, b.y],
        ] as [number, number][],
      };
    });

  const maxRank = Math.max(0, ...rank.values());
  return {
    width,
    height: 2 * MARGIN + (maxRank + 1) * NODE_H + maxRank * VGAP,
    boxes,
    edges,
  };
}
