"""Flow-diagram image -> ExtractionResult: node blobs, directed arrows,
corrected labels and a reconstructed computational graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import CompGraph, LayerNode
from .labels import NoMatch, correct_label, default_lexicon, fallback_params
from .ocr import read_label_builtin, read_label_external
from .vision import binarize, canny, component_contour, connected_components

UNKNOWN_KIND = "Unknown"


@dataclass
class ExtractorConfig:
    threshold_block_size: int = 31
    threshold_C: float = 5.0
    canny_low: float = 50.0
    canny_high: float = 150.0
    min_node_area_px: int = 400
    rect_fill_ratio_min: float = 0.6
    hollow_ratio_max: float = 0.55  # ink / enclosed area; closed-contour proxy
    snap_radius_px: int = 12
    head_window: int = 9
    ocr_backend: str = "builtin"  # or "external"
    ocr_command: list[str] | None = None
    lexicon_max_edit_distance: int = 2
    executable_fallback: bool = False  # fill missing params with midpoints

    def __post_init__(self):
        if self.threshold_block_size < 3 or self.threshold_block_size % 2 == 0:
            raise ValueError("threshold_block_size must be odd >= 3")
        if self.canny_low >= self.canny_high:
            raise ValueError("canny_low must be < canny_high")


@dataclass
class Blob:
    bbox: tuple[int, int, int, int]
    raw_text: str = ""
    corrected_label: str = UNKNOWN_KIND
    params: dict | None = None
    return_seq: bool = False
    confidence: float = 0.0


@dataclass
class Arrow:
    src_blob_idx: int
    dst_blob_idx: int
    polyline: list[tuple[int, int]]


@dataclass
class ExtractionResult:
    blobs: list[Blob] = field(default_factory=list)
    arrows: list[Arrow] = field(default_factory=list)
    graph: CompGraph | None = None
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------


def detect_nodes(binary: np.ndarray, config: ExtractorConfig) -> list[Blob]:
    """Closed-contour node detection on the Canny edge map.

    A contour counts as a node when its enclosed area passes the minimum,
    its bounding-box fill ratio passes the minimum, and it is hollow (a
    closed outline rather than a solid stroke).  Nested duplicates from
    the outline's two Canny edges are merged."""
    edges = canny(binary, config.canny_low, config.canny_high)
    candidates = []
    for pts in connected_components(edges):
        if len(pts) < 8:
            continue
        boundary, area, bbox, ink_count = component_contour(pts, binary.shape)
        if area < config.min_node_area_px:
            continue
        x, y, w, h = bbox
        if area / (w * h) < config.rect_fill_ratio_min:
            continue
        if ink_count / max(area, 1.0) > config.hollow_ratio_max:
            continue
        candidates.append(bbox)

    # drop boxes nested inside an accepted (larger) box
    candidates.sort(key=lambda b: -(b[2] * b[3]))
    kept: list[tuple[int, int, int, int]] = []
    for x, y, w, h in candidates:
        inside = any(
            x >= kx - 4 and y >= ky - 4 and x + w <= kx + kw + 4 and y + h <= ky + kh + 4
            for kx, ky, kw, kh in kept
        )
        if not inside:
            kept.append((x, y, w, h))
    kept.sort(key=lambda b: (b[1], b[0]))
    return [Blob(bbox=b) for b in kept]


def _endpoints(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two extremal points of a component by geodesic diameter (double
    BFS inside the ink), so bends in a polyline are not mistaken for
    endpoints."""
    y0, x0 = pts[:, 0].min(), pts[:, 1].min()
    local = np.zeros(
        (pts[:, 0].max() - y0 + 1, pts[:, 1].max() - x0 + 1), dtype=bool
    )
    ly, lx = pts[:, 0] - y0, pts[:, 1] - x0
    local[ly, lx] = True

    def farthest(sy, sx):
        dist = np.full(local.shape, -1, dtype=np.int32)
        dist[sy, sx] = 0
        frontier = [(sy, sx)]
        last = (sy, sx)
        h, w = local.shape
        while frontier:
            nxt = []
            for y, x in frontier:
                last = (y, x)
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx_ = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx_ < w and local[ny, nx_] and dist[ny, nx_] < 0:
                            dist[ny, nx_] = dist[y, x] + 1
                            nxt.append((ny, nx_))
            frontier = nxt
        return last

    u = farthest(int(ly[0]), int(lx[0]))
    v = farthest(*u)
    return (
        np.array([u[0] + y0, u[1] + x0]),
        np.array([v[0] + y0, v[1] + x0]),
    )


def _bbox_distance(point, bbox) -> float:
    y, x = point
    bx, by, bw, bh = bbox
    dx = max(bx - x, 0, x - (bx + bw - 1))
    dy = max(by - y, 0, y - (by + bh - 1))
    return float(np.hypot(dx, dy))


def detect_arrows(
    binary: np.ndarray, blobs: list[Blob], config: ExtractorConfig
) -> tuple[list[Arrow], dict]:
    """Mask out node interiors, re-run component analysis, and turn the
    remaining ink into directed arrows via the densest-endpoint rule."""
    ink = (binary == 0).copy()
    for blob in blobs:
        x, y, w, h = blob.bbox
        ink[max(0, y - 2) : y + h + 2, max(0, x - 2) : x + w + 2] = False

    arrows: list[Arrow] = []
    discarded = 0
    # grow the arrowhead-density window with the drawing scale, estimated
    # from the median node height (nodes are one text line tall)
    if blobs:
        med_h = float(np.median([b.bbox[3] for b in blobs]))
        est_scale = max(1, round(med_h / 32))
    else:
        est_scale = 1
    pad = (config.head_window * est_scale) // 2
    padded = np.pad(ink, pad, mode="constant")
    for pts in connected_components(ink):
        if len(pts) < 6:
            discarded += 1
            continue
        a, b = _endpoints(pts)
        snapped = []
        for p in (a, b):
            dists = [_bbox_distance(p, blob.bbox) for blob in blobs]
            if dists and min(dists) <= config.snap_radius_px:
                snapped.append(int(np.argmin(dists)))
            else:
                snapped.append(None)
        if snapped[0] is None or snapped[1] is None or snapped[0] == snapped[1]:
            discarded += 1
            continue

        def density(p):
            y, x = int(p[0]) + pad, int(p[1]) + pad
            return padded[y - pad : y + pad + 1, x - pad : x + pad + 1].sum()

        da, db = density(a), density(b)
        if da == db:
            discarded += 1
            continue
        if db > da:
            src, dst = snapped[0], snapped[1]
            poly = [tuple(int(v) for v in a[::-1]), tuple(int(v) for v in b[::-1])]
        else:
            src, dst = snapped[1], snapped[0]
            poly = [tuple(int(v) for v in b[::-1]), tuple(int(v) for v in a[::-1])]
        arrows.append(Arrow(src, dst, poly))
    return arrows, {"discarded_edges": discarded}


def read_label(image: np.ndarray, bbox, config: ExtractorConfig) -> str:
    if config.ocr_backend == "external":
        if not config.ocr_command:
            raise ValueError("external OCR backend needs ocr_command")
        return read_label_external(image, bbox, config.ocr_command)
    return read_label_builtin(image, bbox, config.threshold_block_size, config.threshold_C)


# ---------------------------------------------------------------------------


def extract(image: np.ndarray, config: ExtractorConfig | None = None) -> ExtractionResult:
    """Full pipeline: binarize, detect nodes, OCR + lexicon-correct labels,
    detect arrows, reconstruct the graph."""
    config = config or ExtractorConfig()
    binary = binarize(image, config.threshold_block_size, config.threshold_C)
    blobs = detect_nodes(binary, config)

    lexicon = default_lexicon()
    unresolved = 0
    for blob in blobs:
        blob.raw_text = read_label(image, blob.bbox, config)
        try:
            kind, params, return_seq = correct_label(
                blob.raw_text, lexicon, config.lexicon_max_edit_distance
            )
            blob.corrected_label = kind
            blob.params = params
            blob.return_seq = return_seq
            blob.confidence = 1.0
        except NoMatch:
            blob.corrected_label = UNKNOWN_KIND
            blob.confidence = 0.0
            unresolved += 1

    arrows, arrow_diag = detect_arrows(binary, blobs, config)

    graph = CompGraph(provenance="extracted_figure")
    for i, blob in enumerate(blobs):
        kind = blob.corrected_label
        params = dict(blob.params or {})
        if kind != UNKNOWN_KIND and config.executable_fallback:
            merged = fallback_params(kind)
            merged.update(params)
            params = merged
        node = LayerNode.__new__(LayerNode)  # bypass kind check for Unknown
        node.id = f"b{i}"
        node.kind = kind
        node.params = params
        node.return_seq = blob.return_seq
        graph.nodes[node.id] = node
    for arrow in arrows:
        graph.edges.append((f"b{arrow.src_blob_idx}", f"b{arrow.dst_blob_idx}"))

    diagnostics = {
        "blobs": len(blobs),
        "arrows": len(arrows),
        "unresolved_labels": unresolved,
        **arrow_diag,
    }
    return ExtractionResult(blobs=blobs, arrows=arrows, graph=graph, diagnostics=diagnostics)
