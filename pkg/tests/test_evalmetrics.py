import csv
import itertools
import json

import numpy as np
import pytest

from dlflow.evalmetrics import (
    SizeLimit,
    bbox_iou,
    boxplot,
    boxplot_svg,
    confusion_matrix,
    evaluate_extraction,
    graph_equivalent,
    graph_equivalent_bruteforce,
    match_blobs,
    write_records_csv,
)
from dlflow.extract import Arrow, Blob, ExtractionResult
from dlflow.graph import LayerNode
from tests.conftest import build_graph


class TestIou:
    def test_identical(self):
        assert bbox_iou((0, 0, 10, 10), (0, 0, 10, 10)) == 1.0

    def test_disjoint(self):
        assert bbox_iou((0, 0, 10, 10), (20, 20, 5, 5)) == 0.0

    def test_half_overlap_oracle(self):
        # 10x10 vs 10x10 shifted by 5: inter 50, union 150
        assert bbox_iou((0, 0, 10, 10), (5, 0, 10, 10)) == pytest.approx(1 / 3)


def _blob(bbox, kind):
    return Blob(bbox=bbox, corrected_label=kind)


def _truth(nodes, edges):
    return {
        "nodes": [
            {"id": nid, "kind": kind, "bbox": list(bbox)} for nid, kind, bbox in nodes
        ],
        "edges": [{"src": s, "dst": d} for s, d in edges],
    }


class TestMatching:
    def test_perfect_match(self):
        result = ExtractionResult(
            blobs=[_blob((0, 0, 40, 20), "Dense"), _blob((0, 50, 40, 20), "Flatten")],
            arrows=[Arrow(0, 1, [])],
        )
        truth = _truth(
            [("a", "Dense", (0, 0, 40, 20)), ("b", "Flatten", (0, 50, 40, 20))],
            [("a", "b")],
        )
        record = evaluate_extraction(result, truth, "m")
        assert record.blob_accuracy == 100.0
        assert record.edge_accuracy == 100.0

    def test_wrong_kind_counts_against(self):
        result = ExtractionResult(
            blobs=[_blob((0, 0, 40, 20), "Dense"), _blob((0, 50, 40, 20), "Dense")],
            arrows=[],
        )
        truth = _truth(
            [("a", "Dense", (0, 0, 40, 20)), ("b", "Flatten", (0, 50, 40, 20))], []
        )
        record = evaluate_extraction(result, truth, "m")
        assert record.blob_accuracy == 50.0

    def test_low_iou_not_matched(self):
        mapping = match_blobs(
            ExtractionResult(blobs=[_blob((0, 0, 10, 10), "Dense")]),
            _truth([("a", "Dense", (8, 8, 10, 10))], []),
        )
        assert mapping == {}

    def test_kind_case_insensitive(self):
        result = ExtractionResult(blobs=[_blob((0, 0, 40, 20), "dense")])
        truth = _truth([("a", "Dense", (0, 0, 40, 20))], [])
        assert evaluate_extraction(result, truth, "m").blob_accuracy == 100.0

    def test_reversed_edge_is_wrong(self):
        result = ExtractionResult(
            blobs=[_blob((0, 0, 40, 20), "Dense"), _blob((0, 50, 40, 20), "Flatten")],
            arrows=[Arrow(1, 0, [])],
        )
        truth = _truth(
            [("a", "Dense", (0, 0, 40, 20)), ("b", "Flatten", (0, 50, 40, 20))],
            [("a", "b")],
        )
        assert evaluate_extraction(result, truth, "m").edge_accuracy == 0.0


class TestBoxplot:
    def test_quartile_fixture(self):
        stats = boxplot([float(v) for v in range(1, 101)])
        assert stats.median == 50.5
        assert stats.q1 == 25.75
        assert stats.q3 == 75.25
        assert stats.min == 1.0 and stats.max == 100.0
        assert stats.mean == 50.5
        assert stats.n == 100

    def test_matches_numpy_linear(self):
        rng = np.random.default_rng(0)
        values = rng.random(37).tolist()
        stats = boxplot(values)
        assert stats.q1 == pytest.approx(np.quantile(values, 0.25))
        assert stats.median == pytest.approx(np.quantile(values, 0.5))
        assert stats.q3 == pytest.approx(np.quantile(values, 0.75))

    def test_svg_emitted(self, tmp_path):
        svg = boxplot_svg({"a": boxplot([1.0, 2.0, 3.0])})
        assert svg.startswith("<svg") and "</svg>" in svg


class TestConfusion:
    def test_matrix_rows_are_truth(self):
        m = confusion_matrix(
            np.array([0, 0, 1, 2]), np.array([0, 1, 1, 2]), n_classes=3
        )
        assert m.tolist() == [[1, 1, 0], [0, 1, 0], [0, 0, 1]]


class TestGraphEquivalence:
    def test_isomorphic_relabel(self, concat_branch):
        other = build_graph(
            [
                (f"x{nid}", n.kind, n.params)
                for nid, n in reversed(list(concat_branch.nodes.items()))
            ],
            [(f"x{s}", f"x{d}") for s, d in concat_branch.edges],
        )
        assert graph_equivalent(concat_branch, other)

    def test_param_sensitivity(self, lenet_like, concat_branch):
        assert not graph_equivalent(lenet_like, concat_branch)

    def test_agrees_with_bruteforce_random(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            n = int(rng.integers(2, 7))
            kinds = ["Dense", "Flatten", "Dropout", "Concat"]
            nodes_a = [(f"a{i}", kinds[int(rng.integers(0, 4))], {}) for i in range(n)]
            edges_a = [
                (f"a{i}", f"a{j}")
                for i in range(n)
                for j in range(i + 1, n)
                if rng.random() < 0.4
            ]
            a = build_graph(nodes_a, edges_a)
            perm = rng.permutation(n)
            if rng.random() < 0.5:
                nodes_b = [(f"b{perm[i]}", k, p) for (_, k, p), i in zip(nodes_a, range(n))]
                edges_b = [(f"b{perm[i]}", f"b{perm[j]}")
                           for (ai, aj) in edges_a
                           for i in [int(ai[1:])] for j in [int(aj[1:])]]
                b = build_graph(sorted(nodes_b), sorted(edges_b))
            else:
                nodes_b = list(nodes_a)
                nodes_b[int(rng.integers(0, n))] = (f"a{n}x", "LSTM", {"nodes": 5})
                b = build_graph(
                    [(f"b{i}", k, p) for i, (_, k, p) in enumerate(nodes_b)],
                    [(f"b{int(s[1:]) if s[1:].isdigit() else 0}",
                      f"b{int(d[1:]) if d[1:].isdigit() else 0}") for s, d in edges_a],
                )
            assert graph_equivalent(a, b) == graph_equivalent_bruteforce(a, b)

    def test_size_limit(self):
        nodes = [(f"n{i}", "Dense", {"nodes": 5}) for i in range(65)]
        big = build_graph(nodes, [])
        with pytest.raises(SizeLimit):
            graph_equivalent(big, big)


def test_write_records_csv(tmp_path):
    result = ExtractionResult(blobs=[_blob((0, 0, 40, 20), "Dense")])
    truth = _truth([("a", "Dense", (0, 0, 40, 20))], [])
    record = evaluate_extraction(result, truth, "model-7")
    out = tmp_path / "r.csv"
    write_records_csv([record], str(out))
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["model_id"] == "model-7"
    assert float(rows[0]["blob_accuracy"]) == 100.0
