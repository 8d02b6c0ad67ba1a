import pytest

from dlflow.codegen import CAFFE, generate
from dlflow.evalmetrics import graph_equivalent
from dlflow.prototxt import ParseError, parse, prototxt_check, read_graph

GOOD = """
name: "tiny"
layer {
  name: "data"
  type: "Input"
  top: "data"
  input_param { shape { dim: 1 dim: 1 dim: 28 dim: 28 } }
}
layer {
  name: "conv1"
  type: "Convolution"
  bottom: "data"
  top: "conv1"
  convolution_param { num_output: 16 kernel_size: 3 pad: 1 stride: 1 }
}
"""


def test_parse_nested_blocks():
    doc = parse(GOOD)
    assert doc[0] == ("name", "tiny")
    layers = [v for k, v in doc if k == "layer"]
    assert len(layers) == 2
    conv = layers[1]
    fields = dict((k, v) for k, v in conv if not isinstance(v, list))
    assert fields["type"] == "Convolution"
    assert fields["bottom"] == "data"


def test_parse_rejects_unbalanced():
    with pytest.raises(ParseError):
        parse("layer { name: \"x\" ")


def test_check_accepts_good():
    ok, problems = prototxt_check(GOOD)
    assert ok and problems == []


def test_check_flags_missing_name_and_dangling_bottom():
    bad = GOOD.replace('name: "conv1"\n  ', "").replace('bottom: "data"', 'bottom: "ghost"')
    ok, problems = prototxt_check(bad)
    assert not ok
    text = " ".join(problems)
    assert "name" in text and "ghost" in text


def test_read_graph_round_trip(lenet_like):
    document = generate(lenet_like, CAFFE)
    back = read_graph(document)
    assert back.provenance == "edited"
    kinds = [back.nodes[nid].kind for nid in back.topological_order()]
    assert kinds == ["InputMNIST", "Conv2D", "MaxPool2D", "Flatten", "Dense", "Dense"]
    # the softmax head layer is dropped on read-back
    assert graph_equivalent(back, lenet_like)


def test_read_graph_branch_round_trip(concat_branch):
    back = read_graph(generate(concat_branch, CAFFE))
    assert graph_equivalent(back, concat_branch)


def test_read_graph_params(lenet_like):
    back = read_graph(generate(lenet_like, CAFFE))
    by_kind = {n.kind: n for n in back.nodes.values()}
    assert by_kind["Conv2D"].params == {"filters": 32, "filter_size": 5}
    assert by_kind["MaxPool2D"].params == {"filter_size": 2, "stride": 2}


def test_unknown_input_dims_rejected():
    bad = GOOD.replace("dim: 28 dim: 28", "dim: 17 dim: 17")
    with pytest.raises(ParseError):
        read_graph(bad)
