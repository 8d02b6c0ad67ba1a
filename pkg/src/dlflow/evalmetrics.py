"""Accuracy protocol for diagram extraction: per-model blob/arrow accuracy
records, box-plot aggregates, confusion matrices and an exact
graph-equivalence check used as the round-trip oracle."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from itertools import permutations

import numpy as np

from .graph import CompGraph


class EmptyInput(ValueError):
    pass


class SizeLimit(ValueError):
    """Graph too large for the exact equivalence check."""


@dataclass
class AccuracyRecord:
    model_id: str
    blob_accuracy: float
    edge_accuracy: float
    matched_blobs: int
    missed_blobs: int
    spurious_blobs: int
    matched_edges: int
    missed_edges: int
    spurious_edges: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BoxPlotStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# blob / edge matching


def bbox_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def match_blobs(result, truth: dict, iou_threshold: float = 0.5) -> dict[int, int]:
    """Greedy one-to-one matching of detected blobs to ground-truth nodes
    by descending bbox IoU; a pair matches iff IoU passes the threshold
    and the corrected kind equals the truth kind (case-insensitive).
    Returns {blob index -> truth node index}."""
    gt_nodes = truth["nodes"]
    pairs = []
    for i, blob in enumerate(result.blobs):
        for j, node in enumerate(gt_nodes):
            iou = bbox_iou(blob.bbox, tuple(node["bbox"]))
            if iou >= iou_threshold and blob.corrected_label.lower() == node["kind"].lower():
                pairs.append((iou, i, j))
    pairs.sort(key=lambda p: -p[0])
    matched: dict[int, int] = {}
    used = set()
    for _, i, j in pairs:
        if i in matched or j in used:
            continue
        matched[i] = j
        used.add(j)
    return matched


def evaluate_extraction(result, truth: dict, model_id: str = "") -> AccuracyRecord:
    """Blob and arrow accuracy of one extraction against its sidecar."""
    matching = match_blobs(result, truth)
    gt_nodes = truth["nodes"]
    n_gt = len(gt_nodes)
    matched_blobs = len(matching)
    blob_acc = 100.0 * matched_blobs / n_gt if n_gt else 100.0

    # arrows compared via matched node identities, direction included
    id_of = {j: node["id"] for j, node in enumerate(gt_nodes)}
    gt_edges = {(e["src"], e["dst"]) for e in truth["edges"]}
    correct = set()
    spurious_edges = 0
    for arrow in result.arrows:
        si, di = arrow.src_blob_idx, arrow.dst_blob_idx
        if si in matching and di in matching:
            edge = (id_of[matching[si]], id_of[matching[di]])
            if edge in gt_edges and edge not in correct:
                correct.add(edge)
                continue
        spurious_edges += 1
    edge_acc = 100.0 * len(correct) / len(gt_edges) if gt_edges else 100.0

    return AccuracyRecord(
        model_id=model_id,
        blob_accuracy=blob_acc,
        edge_accuracy=edge_acc,
        matched_blobs=matched_blobs,
        missed_blobs=n_gt - matched_blobs,
        spurious_blobs=len(result.blobs) - matched_blobs,
        matched_edges=len(correct),
        missed_edges=len(gt_edges) - len(correct),
        spurious_edges=spurious_edges,
    )


def blob_accuracy(result, truth: dict) -> float:
    return evaluate_extraction(result, truth).blob_accuracy


def edge_accuracy(result, truth: dict) -> float:
    return evaluate_extraction(result, truth).edge_accuracy


# ---------------------------------------------------------------------------
# aggregates


def boxplot(values) -> BoxPlotStats:
    """Five-number summary plus mean; quartiles by linear interpolation
    between order statistics (the numpy default)."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("boxplot of empty sequence")
    q1, med, q3 = np.quantile(arr, [0.25, 0.5, 0.75], method="linear")
    return BoxPlotStats(
        min=float(arr.min()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        max=float(arr.max()),
        mean=float(arr.mean()),
        n=int(arr.size),
    )


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Rows are ground truth, columns are predictions."""
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(np.asarray(y_true, int), np.asarray(y_pred, int)):
        m[t, p] += 1
    return m


def confusion_report(model, dataset) -> dict:
    """Per-split confusion matrices (row = ground truth) and accuracies
    for any model exposing predict(X)."""
    report = {}
    n_classes = dataset.n_classes
    for split in ("train", "val", "test"):
        X, y = dataset.split(split)
        if len(y) == 0:
            raise EmptyInput(f"empty {split} split")
        pred = model.predict(X)
        m = confusion_matrix(y, pred, n_classes)
        report[split] = {
            "confusion": m.tolist(),
            "accuracy": float(np.trace(m) / m.sum()),
        }
    return report


# ---------------------------------------------------------------------------
# graph equivalence


def _signatures(g: CompGraph, compare_params: bool) -> dict[str, tuple]:
    order = g.topological_order()
    preds: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    succs: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    for s, d in g.edges:
        preds[d].append(s)
        succs[s].append(d)
    rank: dict[str, int] = {}
    for nid in order:
        rank[nid] = 1 + max((rank[p] for p in preds[nid]), default=-1)
    sig = {}
    for nid, node in g.nodes.items():
        params = tuple(sorted(node.params.items())) if compare_params else ()
        sig[nid] = (
            rank[nid],
            node.kind,
            node.return_seq,
            len(preds[nid]),
            len(succs[nid]),
            params,
        )
    return sig


def graph_equivalent(a: CompGraph, b: CompGraph, compare_params: bool = False) -> bool:
    """Exact isomorphism respecting layer kinds (and params when asked),
    via backtracking over candidate sets pruned by (rank, kind, degree)
    signatures.  Limited to 64 nodes."""
    if len(a.nodes) > 64 or len(b.nodes) > 64:
        raise SizeLimit("graph_equivalent is exact only up to 64 nodes")
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return False
    sig_a = _signatures(a, compare_params)
    sig_b = _signatures(b, compare_params)
    if sorted(sig_a.values()) != sorted(sig_b.values()):
        return False

    a_ids = sorted(a.nodes, key=lambda n: (sig_a[n], n))
    candidates = {na: [nb for nb in b.nodes if sig_b[nb] == sig_a[na]] for na in a_ids}
    edges_a = set(a.edges)
    edges_b = set(b.edges)
    mapping: dict[str, str] = {}
    used: set[str] = set()

    def consistent(na: str, nb: str) -> bool:
        for ma, mb in mapping.items():
            if ((na, ma) in edges_a) != ((nb, mb) in edges_b):
                return False
            if ((ma, na) in edges_a) != ((mb, nb) in edges_b):
                return False
        return True

    def backtrack(i: int) -> bool:
        if i == len(a_ids):
            return True
        na = a_ids[i]
        for nb in candidates[na]:
            if nb in used or not consistent(na, nb):
                continue
            mapping[na] = nb
            used.add(nb)
            if backtrack(i + 1):
                return True
            del mapping[na]
            used.discard(nb)
        return False

    return backtrack(0)


def graph_equivalent_bruteforce(a: CompGraph, b: CompGraph, compare_params: bool = False) -> bool:
    """Reference implementation by permutation search; only for tiny graphs."""
    if len(a.nodes) > 8 or len(b.nodes) > 8:
        raise SizeLimit("brute force limited to 8 nodes")
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return False

    def key(g, nid):
        node = g.nodes[nid]
        params = tuple(sorted(node.params.items())) if compare_params else ()
        return (node.kind, node.return_seq, params)

    a_ids = list(a.nodes)
    b_ids = list(b.nodes)
    edges_a = set(a.edges)
    edges_b = set(b.edges)
    for perm in permutations(b_ids):
        m = dict(zip(a_ids, perm))
        if any(key(a, na) != key(b, nb) for na, nb in m.items()):
            continue
        if all(((m[s], m[d]) in edges_b) for s, d in edges_a):
            return True
    return False


# ---------------------------------------------------------------------------
# reports


def write_records_csv(records: list[AccuracyRecord], path) -> None:
    fields = [
        "model_id", "blob_accuracy", "edge_accuracy",
        "matched_blobs", "missed_blobs", "spurious_blobs",
        "matched_edges", "missed_edges", "spurious_edges",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.to_dict())


def write_report_json(records: list[AccuracyRecord], path) -> None:
    blob = boxplot([r.blob_accuracy for r in records])
    edge = boxplot([r.edge_accuracy for r in records])
    payload = {
        "n_models": len(records),
        "blob": blob.to_dict(),
        "edge": edge.to_dict(),
        "records": [r.to_dict() for r in records],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def boxplot_svg(stats_by_label: dict[str, BoxPlotStats], title: str = "") -> str:
    """Minimal static SVG box plot, one box per labelled stats entry."""
    width, height = 120 + 90 * len(stats_by_label), 320
    top, bottom = 40, 280
    lo = min(s.min for s in stats_by_label.values())
    hi = max(s.max for s in stats_by_label.values())
    span = (hi - lo) or 1.0

    def y(v):
        return bottom - (v - lo) / span * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for i, (label, s) in enumerate(stats_by_label.items()):
        cx = 100 + 90 * i
        parts += [
            f'<line x1="{cx}" y1="{y(s.min):.1f}" x2="{cx}" y2="{y(s.max):.1f}" stroke="black"/>',
            f'<rect x="{cx - 25}" y="{y(s.q3):.1f}" width="50" '
            f'height="{y(s.q1) - y(s.q3):.1f}" fill="white" stroke="black"/>',
            f'<line x1="{cx - 25}" y1="{y(s.median):.1f}" x2="{cx + 25}" '
            f'y2="{y(s.median):.1f}" stroke="black" stroke-width="2"/>',
            f'<text x="{cx}" y="{bottom + 20}" text-anchor="middle" font-size="12">{label}</text>',
        ]
    parts.append("</svg>")
    return "\n".join(parts)
