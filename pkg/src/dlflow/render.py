"""Rasterizes a computational graph into a flow-diagram image in two
visual styles, with a ground-truth sidecar for evaluation.

All drawing is aliasing-free (hard pixel writes) so downstream
binarization is exact; text uses the shipped bitmap font atlas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .fontdata import text_size, text_bitmap
from .graph import CompGraph, validate
from .labels import format_label

STYLE_K = "StyleK"
STYLE_C = "StyleC"
STYLES = (STYLE_K, STYLE_C)

CELL_PAD_X = 10
CELL_PAD_Y = 10
NODE_H = 12 + 2 * CELL_PAD_Y
MIN_NODE_W = 70
VGAP = 38
MARGIN = 30
LANE_STEP = 12
LANE_CLEAR = 16
SKIP_OFF = 26  # horizontal offset of skip-edge attachment points

# StyleC fill colors per kind family (light, far from text luminance).
_FILL_COLORS = {
    "Input": (250, 220, 168),
    "Dense": (194, 224, 255),
    "Conv2D": (198, 246, 201),
    "MaxPool2D": (255, 213, 213),
    "AvgPool2D": (255, 228, 196),
    "Flatten": (228, 228, 228),
    "Dropout": (240, 240, 200),
    "Concat": (226, 202, 255),
    "Embed": (202, 255, 244),
    "SimpleRNN": (255, 222, 244),
    "LSTM": (214, 214, 255),
}


class InvalidGraph(ValueError):
    """Rendering refused: the graph failed validation."""


class LayoutOverflow(ValueError):
    """Graph exceeds the layout node budget."""


@dataclass
class Layout:
    node_boxes: dict[str, tuple[int, int, int, int]]
    edge_paths: list[list[tuple[int, int]]]  # aligned with graph.edges
    width: int
    height: int
    labels: dict[str, str] = field(default_factory=dict)


def _node_label(node, style: str) -> str:
    if style == STYLE_C:
        return node.kind
    return format_label(node.kind, node.params, node.return_seq)


def _ranks(graph: CompGraph) -> dict[str, int]:
    ranks: dict[str, int] = {}
    for nid in graph.topological_order():
        preds = graph.predecessors(nid)
        ranks[nid] = max((ranks[p] + 1 for p in preds), default=0)
    return ranks


def layout(graph: CompGraph, style: str, node_budget: int = 200) -> Layout:
    """Layered top-down placement with side lanes for skip edges."""
    if len(graph.nodes) > node_budget:
        raise LayoutOverflow(f"{len(graph.nodes)} nodes exceeds budget {node_budget}")
    ranks = _ranks(graph)
    n_ranks = max(ranks.values()) + 1 if ranks else 0

    labels = {nid: _node_label(graph.nodes[nid], style) for nid in graph.nodes}
    sizes = {}
    for nid, label in labels.items():
        tw, _ = text_size(label)
        sizes[nid] = (max(MIN_NODE_W, tw + 2 * CELL_PAD_X), NODE_H)

    by_rank: dict[int, list[str]] = {}
    for nid, r in ranks.items():
        by_rank.setdefault(r, []).append(nid)
    for r in by_rank:
        by_rank[r].sort()

    # Skip edges (rank gap > 1) get side lanes; greedily pick the side with
    # fewer partially-overlapping neighbours, inner spans on inner lanes.
    skip_edges = [
        (i, ranks[s], ranks[d])
        for i, (s, d) in enumerate(graph.edges)
        if ranks[d] - ranks[s] > 1
    ]
    skip_edges.sort(key=lambda e: (e[2] - e[1], e[1]))
    lane_of: dict[int, tuple[str, int]] = {}
    assigned: dict[str, list[tuple[int, int, int]]] = {"R": [], "L": []}

    def overlaps(a1, a2, b1, b2):
        return a1 < b2 and b1 < a2

    def partial(a1, a2, b1, b2):
        return overlaps(a1, a2, b1, b2) and not (
            (a1 <= b1 and b2 <= a2) or (b1 <= a1 and a2 <= b2)
        )

    for idx, r1, r2 in skip_edges:
        scores = {}
        for side in ("R", "L"):
            scores[side] = sum(partial(r1, r2, b1, b2) for _, b1, b2 in assigned[side])
        side = "R" if scores["R"] <= scores["L"] else "L"
        lane = 0
        for other_lane, b1, b2 in assigned[side]:
            if overlaps(r1, r2, b1, b2):
                lane = max(lane, other_lane + 1)
        lane_of[idx] = (side, lane)
        assigned[side].append((lane, r1, r2))

    lanes_right = 1 + max((l for (s, l) in lane_of.values() if s == "R"), default=-1)
    lanes_left = 1 + max((l for (s, l) in lane_of.values() if s == "L"), default=-1)

    rank_width = {r: sum(sizes[n][0] for n in ns) + 24 * (len(ns) - 1) for r, ns in by_rank.items()}
    content_w = max(rank_width.values(), default=MIN_NODE_W)
    left_space = MARGIN + (lanes_left * LANE_STEP + LANE_CLEAR if lanes_left else 0)
    axis_x = left_space + content_w // 2
    content_right = left_space + content_w
    width = content_right + (lanes_right * LANE_STEP + LANE_CLEAR if lanes_right else 0) + MARGIN
    height = MARGIN * 2 + n_ranks * NODE_H + (n_ranks - 1) * VGAP

    node_boxes: dict[str, tuple[int, int, int, int]] = {}
    for r, ns in by_rank.items():
        y = MARGIN + r * (NODE_H + VGAP)
        total = rank_width[r]
        x = axis_x - total // 2
        for nid in ns:
            w, h = sizes[nid]
            node_boxes[nid] = (x, y, w, h)
            x += w + 24

    def cx(nid):
        x, y, w, h = node_boxes[nid]
        return x + w // 2

    def top(nid):
        return node_boxes[nid][1]

    def bottom(nid):
        x, y, w, h = node_boxes[nid]
        return y + h

    # Attachment offsets when several adjacent-rank edges share a node side.
    chain_out: dict[str, list[int]] = {}
    chain_in: dict[str, list[int]] = {}
    for i, (s, d) in enumerate(graph.edges):
        if ranks[d] - ranks[s] == 1:
            chain_out.setdefault(s, []).append(i)
            chain_in.setdefault(d, []).append(i)

    def spread(k, n):
        if n == 1:
            return 0
        return (k - (n - 1) / 2) * 16

    # Skip attachments offset per (node, side) so edges sharing an endpoint
    # never overlap at the box.
    skip_out_count: dict[tuple[str, str], int] = {}
    skip_in_count: dict[tuple[str, str], int] = {}

    edge_paths: list[list[tuple[int, int]]] = []
    for i, (s, d) in enumerate(graph.edges):
        if ranks[d] - ranks[s] == 1:
            xo = cx(s) + int(spread(chain_out[s].index(i), len(chain_out[s])))
            xi = cx(d) + int(spread(chain_in[d].index(i), len(chain_in[d])))
            y0, y1 = bottom(s) + 3, top(d) - 3
            if xo == xi:
                path = [(xo, y0), (xo, y1)]
            else:
                ym = (y0 + y1) // 2
                path = [(xo, y0), (xo, ym), (xi, ym), (xi, y1)]
        else:
            side, lane = lane_of[i]
            sign = 1 if side == "R" else -1
            if side == "R":
                lane_x = content_right + LANE_CLEAR + lane * LANE_STEP
            else:
                lane_x = left_space - LANE_CLEAR - lane * LANE_STEP
            ko = skip_out_count.get((s, side), 0)
            skip_out_count[(s, side)] = ko + 1
            ki = skip_in_count.get((d, side), 0)
            skip_in_count[(d, side)] = ki + 1
            xo = cx(s) + sign * (SKIP_OFF + 9 * ko)
            xi = cx(d) + sign * (SKIP_OFF + 9 * ki)
            y_out = bottom(s) + 8 + (lane % 4) * 5
            y_in = top(d) - 14 - (lane % 4) * 5
            path = [
                (xo, bottom(s) + 3),
                (xo, y_out),
                (lane_x, y_out),
                (lane_x, y_in),
                (xi, y_in),
                (xi, top(d) - 3),
            ]
        edge_paths.append(path)

    return Layout(node_boxes, edge_paths, width, height, labels)


# ---------------------------------------------------------------------------
# Raster primitives (no anti-aliasing by construction)


def _fill_rect(canvas, x0, y0, x1, y1, color):
    h, w, _ = canvas.shape
    x0, y0 = max(0, x0), max(0, y0)
    x1, y1 = min(w, x1), min(h, y1)
    if x1 > x0 and y1 > y0:
        canvas[y0:y1, x0:x1] = color


def _draw_box(canvas, box, border, thickness, fill=None):
    x, y, w, h = box
    if fill is not None:
        _fill_rect(canvas, x, y, x + w, y + h, fill)
    t = thickness
    _fill_rect(canvas, x, y, x + w, y + t, border)
    _fill_rect(canvas, x, y + h - t, x + w, y + h, border)
    _fill_rect(canvas, x, y, x + t, y + h, border)
    _fill_rect(canvas, x + w - t, y, x + w, y + h, border)


def _draw_segment(canvas, p0, p1, color, thickness):
    (x0, y0), (x1, y1) = p0, p1
    n = max(abs(x1 - x0), abs(y1 - y0), 1)
    t0, t1 = -(thickness // 2), thickness - thickness // 2
    for k in range(n + 1):
        x = x0 + (x1 - x0) * k // n
        y = y0 + (y1 - y0) * k // n
        _fill_rect(canvas, x + t0, y + t0, x + t1, y + t1, color)


def _draw_triangle(canvas, pts, color):
    ys = [p[1] for p in pts]
    xs = [p[0] for p in pts]
    y0, y1 = max(0, min(ys)), min(canvas.shape[0] - 1, max(ys))
    x0, x1 = max(0, min(xs)), min(canvas.shape[1] - 1, max(xs))
    if x1 < x0 or y1 < y0:
        return
    yy, xx = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]

    def edge(a, b):
        return (xx - a[0]) * (b[1] - a[1]) - (yy - a[1]) * (b[0] - a[0])

    a, b, c = pts
    e0, e1, e2 = edge(a, b), edge(b, c), edge(c, a)
    mask = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
    region = canvas[y0 : y1 + 1, x0 : x1 + 1]
    region[mask] = color


def _draw_text(canvas, x, y, text, color, scale):
    bmp = text_bitmap(text, scale)
    h, w = bmp.shape
    H, W, _ = canvas.shape
    if y + h > H or x + w > W or x < 0 or y < 0:
        bmp = bmp[: max(0, H - y), : max(0, W - x)]
        h, w = bmp.shape
    region = canvas[y : y + h, x : x + w]
    region[bmp == 1] = color


def _arrowhead(canvas, path, color, scale):
    """Filled triangle at the destination end of the (scaled) path."""
    (x0, y0), (x1, y1) = path[-2], path[-1]
    dx, dy = x1 - x0, y1 - y0
    n = max(abs(dx), abs(dy), 1)
    ux, uy = dx / n, dy / n
    L = 9 * scale
    Wd = 5 * scale
    bx, by = x1 - ux * L, y1 - uy * L
    px, py = -uy, ux
    pts = [
        (int(x1), int(y1)),
        (int(bx + px * Wd), int(by + py * Wd)),
        (int(bx - px * Wd), int(by - py * Wd)),
    ]
    _draw_triangle(canvas, pts, color)


# ---------------------------------------------------------------------------


def render(graph: CompGraph, style: str, scale: int = 1, node_budget: int = 200):
    """Rasterize to an RGB array plus a ground-truth sidecar dict."""
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}")
    if scale < 1 or int(scale) != scale:
        raise ValueError("scale must be a positive integer")
    report = validate(graph, strict_domains=False)
    if not report.ok:
        raise InvalidGraph(f"graph failed validation: {report.violations[:3]}")

    lay = layout(graph, style, node_budget)
    s = int(scale)
    H, W = lay.height * s, lay.width * s
    canvas = np.full((H, W, 3), 255, dtype=np.uint8)
    ink = (0, 0, 0)
    thickness = 2 * s

    sidecar_nodes = []
    for nid, (x, y, w, h) in lay.node_boxes.items():
        box = (x * s, y * s, w * s, h * s)
        node = graph.nodes[nid]
        if style == STYLE_C:
            fam = "Input" if node.kind.startswith("Input") else node.kind
            fill = _FILL_COLORS.get(fam, (235, 235, 235))
            _draw_box(canvas, box, (40, 40, 40), thickness, fill=fill)
        else:
            _draw_box(canvas, box, ink, thickness, fill=(255, 255, 255))
        label = lay.labels[nid]
        tw, th = text_size(label, s)
        tx = box[0] + (box[2] - tw) // 2
        ty = box[1] + (box[3] - th) // 2
        _draw_text(canvas, tx, ty, label, ink, s)
        sidecar_nodes.append(
            {"id": nid, "kind": node.kind, "label": label, "bbox": list(box)}
        )

    sidecar_edges = []
    for (srcdst, path) in zip(graph.edges, lay.edge_paths):
        spath = [(x * s, y * s) for x, y in path]
        if style == STYLE_C and len(spath) == 2:
            # gentle bow so chain edges read as curves
            (x0, y0), (x1, y1) = spath
            if y1 - y0 > 14 * s:
                spath = [(x0, y0), (x0 + 4 * s, (y0 + y1) // 2), (x1, y1)]
        for a, b in zip(spath, spath[1:]):
            _draw_segment(canvas, a, b, ink, thickness)
        _arrowhead(canvas, spath, ink, s)
        sidecar_edges.append(
            {"src": srcdst[0], "dst": srcdst[1], "polyline": [list(p) for p in spath]}
        )

    sidecar = {
        "image": {"w": W, "h": H},
        "style": style,
        "scale": s,
        "nodes": sidecar_nodes,
        "edges": sidecar_edges,
    }
    return canvas, sidecar


def save_artifact(image: np.ndarray, sidecar: dict, png_path: str) -> None:
    Image.fromarray(image).save(png_path)
    gt_path = png_path[:-4] + ".gt.json" if png_path.endswith(".png") else png_path + ".gt.json"
    with open(gt_path, "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2)
        f.write("\n")


def load_image(path: str) -> np.ndarray:
    img = Image.open(path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    return np.asarray(img)
