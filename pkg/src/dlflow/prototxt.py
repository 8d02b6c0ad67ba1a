"""Protobuf text-format support: a small parser, a structural checker for
emitted network definitions, and a reader mapping them back to CompGraphs."""

from __future__ import annotations

import re

from .graph import CompGraph, LayerNode

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}:])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    pass


def _tokenize(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        yield m.lastgroup, m.group()
    yield "eof", ""


def parse(text: str) -> list[tuple[str, object]]:
    """Text-format message as an ordered list of (field, value) pairs;
    nested messages are themselves lists of pairs."""
    tokens = list(_tokenize(text))
    idx = 0

    def peek():
        return tokens[idx]

    def advance():
        nonlocal idx
        tok = tokens[idx]
        idx += 1
        return tok

    def parse_fields(top_level: bool):
        fields = []
        while True:
            kind, value = peek()
            if kind == "eof":
                if not top_level:
                    raise ParseError("unexpected end of input inside a message")
                return fields
            if kind == "punct" and value == "}":
                if top_level:
                    raise ParseError("unbalanced closing brace")
                return fields
            if kind != "ident":
                raise ParseError(f"expected field name, found {value!r}")
            name = advance()[1]
            kind, value = peek()
            if kind == "punct" and value == "{":
                advance()
                fields.append((name, parse_fields(False)))
                k, v = advance()
                if (k, v) != ("punct", "}"):
                    raise ParseError(f"expected closing brace, found {v!r}")
            elif kind == "punct" and value == ":":
                advance()
                k, v = advance()
                if k == "string":
                    fields.append((name, v[1:-1]))
                elif k == "number":
                    fields.append((name, float(v) if "." in v or "e" in v.lower() else int(v)))
                elif k == "ident":
                    fields.append((name, v))  # enum constant
                else:
                    raise ParseError(f"expected a value after {name!r}, found {v!r}")
            else:
                raise ParseError(f"expected ':' or '{{' after {name!r}")

    return parse_fields(True)


def _get(fields, name, default=None):
    for k, v in fields:
        if k == name:
            return v
    return default


def _get_all(fields, name):
    return [v for k, v in fields if k == name]


def prototxt_check(document: str) -> tuple[bool, list[str]]:
    """True iff the document parses, every layer has name and type, and
    every bottom references an already-declared top."""
    problems: list[str] = []
    try:
        fields = parse(document)
    except ParseError as exc:
        return False, [str(exc)]
    tops: set[str] = set()
    for key, value in fields:
        if key != "layer":
            continue
        if not isinstance(value, list):
            problems.append("layer field is not a message")
            continue
        name = _get(value, "name")
        if not name:
            problems.append("layer without a name")
        if not _get(value, "type"):
            problems.append(f"layer {name!r} without a type")
        for bottom in _get_all(value, "bottom"):
            if bottom not in tops:
                problems.append(f"layer {name!r} references undeclared bottom {bottom!r}")
        tops.update(_get_all(value, "top"))
    return not problems, problems


# ---------------------------------------------------------------------------
# reader: prototxt -> CompGraph

_INPUT_BY_DIMS = {
    (1, 1, 28, 28): "InputMNIST",
    (1, 3, 32, 32): "InputCIFAR10",
    (1, 3, 224, 224): "InputImageNet",
    (1, 100): "InputIMDBText",
}

_SIMPLE_TYPES = {
    "InnerProduct": "Dense",
    "Convolution": "Conv2D",
    "Flatten": "Flatten",
    "Dropout": "Dropout",
    "Concat": "Concat",
    "Embed": "Embed",
    "RNN": "SimpleRNN",
    "LSTM": "LSTM",
}


def _layer_params(kind: str, fields) -> dict:
    if kind == "Dense":
        p = _get(fields, "inner_product_param", [])
        return {"nodes": _get(p, "num_output")}
    if kind == "Conv2D":
        p = _get(fields, "convolution_param", [])
        return {"filters": _get(p, "num_output"), "filter_size": _get(p, "kernel_size")}
    if kind in ("MaxPool2D", "AvgPool2D"):
        p = _get(fields, "pooling_param", [])
        return {"filter_size": _get(p, "kernel_size"), "stride": _get(p, "stride")}
    if kind == "Dropout":
        p = _get(fields, "dropout_param", [])
        return {"probability": _get(p, "dropout_ratio")}
    if kind == "Embed":
        p = _get(fields, "embed_param", [])
        return {"vocab": _get(p, "input_dim"), "embed_size": _get(p, "num_output")}
    if kind == "SimpleRNN":
        p = _get(fields, "recurrent_param", [])
        return {"units": _get(p, "num_output")}
    if kind == "LSTM":
        p = _get(fields, "recurrent_param", [])
        return {"nodes": _get(p, "num_output")}
    return {}


def read_graph(document: str) -> CompGraph:
    """CompGraph from an emitted network definition; the trailing softmax
    head, if present, is dropped."""
    fields = parse(document)
    graph = CompGraph(provenance="edited")
    top_owner: dict[str, str] = {}
    for key, value in fields:
        if key != "layer" or not isinstance(value, list):
            continue
        name = _get(value, "name")
        ltype = _get(value, "type")
        if ltype == "Softmax":
            continue
        if ltype == "Input":
            shape = _get(_get(value, "input_param", []), "shape", [])
            dims = tuple(_get_all(shape, "dim"))
            kind = _INPUT_BY_DIMS.get(dims)
            if kind is None:
                raise ParseError(f"layer {name!r}: unrecognized input shape {dims}")
        elif ltype == "Pooling":
            pool = _get(_get(value, "pooling_param", []), "pool", "MAX")
            kind = "MaxPool2D" if pool == "MAX" else "AvgPool2D"
        else:
            kind = _SIMPLE_TYPES.get(ltype)
            if kind is None:
                raise ParseError(f"layer {name!r}: unsupported type {ltype!r}")
        params = {k: v for k, v in _layer_params(kind, value).items() if v is not None}
        graph.nodes[name] = LayerNode(name, kind, params)
        for bottom in _get_all(value, "bottom"):
            if bottom in top_owner:
                graph.edges.append((top_owner[bottom], name))
        for top in _get_all(value, "top"):
            top_owner[top] = name
    return graph
