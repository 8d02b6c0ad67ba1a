import pytest

from dlflow.graph import CompGraph, LayerNode


def build_graph(nodes, edges, name="", provenance="simulated") -> CompGraph:
    """nodes: (id, kind, params[, return_seq]) tuples."""
    g = CompGraph(name=name, provenance=provenance)
    for nid, kind, params, *rest in nodes:
        g.nodes[nid] = LayerNode(nid, kind, dict(params), bool(rest and rest[0]))
    g.edges = list(edges)
    return g


@pytest.fixture
def lenet_like() -> CompGraph:
    return build_graph(
        [
            ("n0", "InputMNIST", {}),
            ("n1", "Conv2D", {"filters": 32, "filter_size": 5}),
            ("n2", "MaxPool2D", {"filter_size": 2, "stride": 2}),
            ("n3", "Flatten", {}),
            ("n4", "Dense", {"nodes": 100}),
            ("n5", "Dense", {"nodes": 10}),
        ],
        [("n0", "n1"), ("n1", "n2"), ("n2", "n3"), ("n3", "n4"), ("n4", "n5")],
        name="lenet_like",
    )


@pytest.fixture
def concat_branch() -> CompGraph:
    return build_graph(
        [
            ("n0", "InputCIFAR10", {}),
            ("n1", "Conv2D", {"filters": 64, "filter_size": 3}),
            ("n2", "Conv2D", {"filters": 32, "filter_size": 5}),
            ("n3", "Conv2D", {"filters": 32, "filter_size": 3}),
            ("n4", "Concat", {}),
            ("n5", "Flatten", {}),
            ("n6", "Dense", {"nodes": 10}),
        ],
        [
            ("n0", "n1"), ("n1", "n2"), ("n1", "n3"),
            ("n2", "n4"), ("n3", "n4"), ("n4", "n5"), ("n5", "n6"),
        ],
        name="concat_branch",
    )


@pytest.fixture
def embed_lstm() -> CompGraph:
    return build_graph(
        [
            ("n0", "InputIMDBText", {}),
            ("n1", "Embed", {"embed_size": 128, "vocab": 20000}),
            ("n2", "LSTM", {"nodes": 25}),
            ("n3", "Dense", {"nodes": 2}),
        ],
        [("n0", "n1"), ("n1", "n2"), ("n2", "n3")],
        name="embed_lstm",
    )
