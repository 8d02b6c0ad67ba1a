import json

import numpy as np
import pytest

from dlflow.graph import LayerNode
from dlflow.render import (
    STYLES,
    InvalidGraph,
    load_image,
    render,
    save_artifact,
)
from tests.conftest import build_graph


@pytest.mark.parametrize("style", STYLES)
def test_render_returns_image_and_sidecar(style, lenet_like):
    image, sidecar = render(lenet_like, style)
    assert image.dtype == np.uint8 and image.ndim == 3 and image.shape[2] == 3
    assert sidecar["style"] == style
    assert sidecar["image"] == {"w": image.shape[1], "h": image.shape[0]}
    assert len(sidecar["nodes"]) == 6
    assert len(sidecar["edges"]) == 5
    # every bbox lies inside the canvas and contains ink
    for node in sidecar["nodes"]:
        x, y, w, h = node["bbox"]
        assert 0 <= x and 0 <= y and x + w <= image.shape[1] and y + h <= image.shape[0]
        assert (image[y:y + h, x:x + w] < 128).any()


def test_scale_multiplies_geometry(concat_branch):
    _, s1 = render(concat_branch, "StyleK", scale=1)
    _, s2 = render(concat_branch, "StyleK", scale=2)
    assert s2["image"]["w"] == 2 * s1["image"]["w"]
    assert s2["image"]["h"] == 2 * s1["image"]["h"]
    for a, b in zip(s1["nodes"], s2["nodes"]):
        assert b["bbox"] == [2 * v for v in a["bbox"]]


def test_render_is_deterministic(embed_lstm):
    a, sa = render(embed_lstm, "StyleC")
    b, sb = render(embed_lstm, "StyleC")
    assert np.array_equal(a, b)
    assert sa == sb


def test_invalid_graph_rejected():
    g = build_graph([("a", "InputMNIST", {}), ("b", "Flatten", {})], [("a", "b")])
    with pytest.raises(InvalidGraph):
        render(g, "StyleK")


def test_bad_style_and_scale(lenet_like):
    with pytest.raises(ValueError):
        render(lenet_like, "StyleX")
    with pytest.raises(ValueError):
        render(lenet_like, "StyleK", scale=0)


def test_save_artifact_round_trip(tmp_path, lenet_like):
    image, sidecar = render(lenet_like, "StyleK")
    out = tmp_path / "m.png"
    save_artifact(image, sidecar, str(out))
    assert np.array_equal(load_image(str(out)), image)
    back = json.loads((tmp_path / "m.gt.json").read_text())
    assert back == sidecar


def test_deep_chain_renders():
    nodes = [
        ("n0", "InputMNIST", {}),
        ("n1", "Conv2D", {"filters": 16, "filter_size": 3}),
        ("n2", "Flatten", {}),
    ]
    edges = [("n0", "n1"), ("n1", "n2")]
    prev = "n2"
    for i in range(3, 40):
        nodes.append((f"n{i}", "Dense", {"nodes": 50}))
        edges.append((prev, f"n{i}"))
        prev = f"n{i}"
    g = build_graph(nodes, edges)
    image, sidecar = render(g, "StyleK")
    assert len(sidecar["nodes"]) == 40
