import json

import pytest
from hypothesis import given, strategies as st

from dlflow.graph import (
    GRAMMAR_TABLE,
    LSTM_ROW_AS_PRINTED,
    PARAM_DOMAINS,
    CompGraph,
    ConcatIncompatible,
    LayerNode,
    Map3D,
    ParseError,
    RankMismatch,
    Seq,
    ShapeUnderflow,
    StructuralError,
    TokenSeq,
    Vec,
    allowed_next,
    effective_kind,
    from_json,
    grammar_symbol,
    infer_all_shapes,
    infer_shape,
    to_json,
    validate,
)
from tests.conftest import build_graph


class TestGrammarTable:
    def test_literal_transcription(self):
        # independent re-transcription of the adjacency table
        pool_row = {"Conv2D", "Flatten", "Dropout", "MaxPool", "AvgPool", "Concat"}
        vec_row = {"Dense", "Dropout", "Concat", "Embed"}
        seq_row = {"Flatten", "Dropout", "Concat", "RNN", "RNN(seq)", "LSTM", "LSTM(seq)"}
        expected = {
            "Input": {"Dense", "Conv2D", "Embed"},
            "Dense": vec_row,
            "Conv2D": pool_row,
            "Flatten": vec_row,
            "MaxPool": pool_row,
            "AvgPool": pool_row,
            "RNN": vec_row,
            "RNN(seq)": seq_row,
            "LSTM": vec_row,
            "LSTM(seq)": seq_row,
            "Embed": {"RNN", "RNN(seq)", "LSTM", "LSTM(seq)"},
        }
        assert {k: set(v) for k, v in GRAMMAR_TABLE.items()} == expected

    def test_printed_lstm_row_preserved(self):
        assert LSTM_ROW_AS_PRINTED == {"Conv2D", "Dropout", "Concat", "Embed"}

    def test_grammar_symbols(self):
        assert grammar_symbol("InputMNIST") == "Input"
        assert grammar_symbol("SimpleRNN", True) == "RNN(seq)"
        assert grammar_symbol("LSTM", False) == "LSTM"
        assert grammar_symbol("MaxPool2D") == "MaxPool"


class TestParamDomains:
    def test_table_values(self):
        assert PARAM_DOMAINS["Dense"]["nodes"][:3] == [5, 10, 15]
        assert PARAM_DOMAINS["Dense"]["nodes"][-1] == 500
        assert PARAM_DOMAINS["Dropout"]["probability"] == [
            0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0
        ]
        assert PARAM_DOMAINS["Conv2D"]["filters"][0] == 16
        assert PARAM_DOMAINS["Conv2D"]["filters"][-1] == 256
        assert PARAM_DOMAINS["Conv2D"]["filter_size"] == [1, 3, 5, 7, 9, 11]
        assert PARAM_DOMAINS["MaxPool2D"]["stride"] == [2, 3, 4, 5]
        assert PARAM_DOMAINS["Embed"]["embed_size"] == [64, 100, 128, 200]
        assert PARAM_DOMAINS["Embed"]["vocab"] == [10000, 20000, 50000, 75000]
        assert PARAM_DOMAINS["SimpleRNN"]["units"] == list(range(3, 26))
        assert PARAM_DOMAINS["LSTM"]["nodes"] == list(range(3, 26))


class TestShapeInference:
    def test_conv_same_padding(self):
        out = infer_shape("Conv2D", {"filters": 32, "filter_size": 5}, [Map3D(28, 28, 1)])
        assert out == Map3D(28, 28, 32)

    def test_pool_floor(self):
        out = infer_shape("MaxPool2D", {"filter_size": 3, "stride": 2}, [Map3D(32, 32, 16)])
        assert out == Map3D(15, 15, 16)

    def test_flatten(self):
        assert infer_shape("Flatten", {}, [Map3D(14, 14, 32)]) == Vec(6272)

    def test_embed(self):
        out = infer_shape("Embed", {"embed_size": 128, "vocab": 20000}, [TokenSeq(100)])
        assert out == Seq(100, 128)

    def test_recurrent(self):
        assert infer_shape("LSTM", {"nodes": 25}, [Seq(100, 128)]) == Vec(25)
        assert infer_shape("LSTM", {"nodes": 25}, [Seq(100, 128)], return_seq=True) == Seq(100, 25)

    def test_concat_vec(self):
        assert infer_shape("Concat", {}, [Vec(10), Vec(20)]) == Vec(30)

    def test_concat_rank_mismatch(self):
        with pytest.raises(ConcatIncompatible):
            infer_shape("Concat", {}, [Vec(10), Map3D(4, 4, 2)])

    def test_pool_underflow(self):
        with pytest.raises(ShapeUnderflow):
            infer_shape("MaxPool2D", {"filter_size": 5, "stride": 2}, [Map3D(3, 3, 8)])

    def test_dense_needs_vec(self):
        with pytest.raises(RankMismatch):
            infer_shape("Dense", {"nodes": 10}, [Map3D(4, 4, 2)])


class TestValidate:
    def test_valid_chain(self, lenet_like):
        assert validate(lenet_like, strict_domains=False).ok

    def test_strict_domain_flags_even_pool(self, lenet_like):
        report = validate(lenet_like)
        assert not report.ok
        assert {v.category for v in report.violations} == {"ParamDomain"}

    def test_terminal_dense_any_width(self, embed_lstm):
        # class-count head (2 classes) is legal despite nodes step of 5
        assert validate(embed_lstm).ok

    def test_grammar_violation(self):
        g = build_graph(
            [("a", "InputMNIST", {}), ("b", "Flatten", {})], [("a", "b")]
        )
        report = validate(g)
        assert any(v.category == "GrammarAdjacency" for v in report.violations)

    def test_dropout_effective_kind(self):
        g = build_graph(
            [
                ("a", "InputCIFAR10", {}),
                ("b", "Conv2D", {"filters": 16, "filter_size": 3}),
                ("c", "Dropout", {"probability": 0.5}),
                ("d", "MaxPool2D", {"filter_size": 3, "stride": 2}),
            ],
            [("a", "b"), ("b", "c"), ("c", "d")],
        )
        report = validate(g)
        assert report.ok, [str(v) for v in report.violations]
        shapes = infer_all_shapes(g)
        assert effective_kind(g, "c", shapes) == "Conv2D"
        assert "MaxPool" in allowed_next(g, "c", shapes)

    def test_cycle_detected(self):
        g = build_graph(
            [("a", "InputMNIST", {}), ("b", "Dense", {"nodes": 10})],
            [("a", "b"), ("b", "a")],
        )
        with pytest.raises(StructuralError):
            g.topological_order()

    def test_unknown_kind_is_structure_violation(self):
        g = build_graph([("a", "InputMNIST", {})], [])
        node = LayerNode.__new__(LayerNode)
        node.id, node.kind, node.params, node.return_seq = "b", "Unknown", {}, False
        g.nodes["b"] = node
        g.edges.append(("a", "b"))
        report = validate(g)
        assert any(v.category == "Structure" for v in report.violations)


class TestJson:
    def test_round_trip(self, concat_branch):
        text = to_json(concat_branch)
        back = from_json(text)
        assert back.structurally_equal(concat_branch)
        assert json.loads(text)["schema"] == "dlp2c/1"

    def test_strict_rejects_unknown_fields(self, lenet_like):
        doc = json.loads(to_json(lenet_like))
        doc["bogus"] = 1
        with pytest.raises(ParseError):
            from_json(json.dumps(doc))
        assert from_json(json.dumps(doc), strict=False) is not None

    def test_rejects_wrong_schema(self):
        with pytest.raises(ParseError):
            from_json(json.dumps({"schema": "other/9", "nodes": []}))

    @given(
        nodes=st.integers(min_value=1, max_value=6),
        seed=st.integers(min_value=0, max_value=10_000),
    )
    def test_round_trip_random_chains(self, nodes, seed):
        import random

        rng = random.Random(seed)
        g = build_graph([("n0", "InputMNIST", {})], [])
        prev, shape_ok = "n0", True
        for i in range(1, nodes):
            nid = f"n{i}"
            g.nodes[nid] = LayerNode(nid, "Dense", {"nodes": rng.randrange(5, 501, 5)})
            g.edges.append((prev, nid))
            prev = nid
        back = from_json(to_json(g))
        assert back.structurally_equal(g)
        assert [n for n in back.nodes] == [n for n in g.nodes]
