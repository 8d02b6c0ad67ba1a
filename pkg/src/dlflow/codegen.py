"""Rule-based code generation: CompGraph -> Keras functional source or
Caffe prototxt.  Layer mappings, value transforms and assertions live in
the shipped rules file so new layer definitions are data, not code."""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources

from .graph import CompGraph, validate

KERAS = "keras"
CAFFE = "caffe"
DIALECTS = (KERAS, CAFFE)


class InvalidGraph(ValueError):
    def __init__(self, report):
        self.report = report
        msgs = "; ".join(f"{v.category}@{v.locus}: {v.message}" for v in report.violations[:5])
        super().__init__(f"graph fails validation: {msgs}")


class UnsupportedLayer(ValueError):
    pass


class AssertionFailed(ValueError):
    pass


@lru_cache(maxsize=1)
def load_rules() -> dict:
    with resources.files("dlflow.data").joinpath("codegen_rules.json").open() as f:
        return json.load(f)


_OPS = {
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
    "==": lambda a, b: a == b,
}


def _check_assertions(kind: str, params: dict, rule: dict) -> None:
    for name, op, bound in rule.get("assert", ()):
        if name not in params:
            raise AssertionFailed(f"{kind}: missing parameter {name!r}")
        if not _OPS[op](params[name], bound):
            raise AssertionFailed(f"{kind}: violated {name} {op} {bound} (got {params[name]})")


def _fmt(value) -> str:
    if isinstance(value, float) and value == int(value):
        return str(value)  # keep "0.5" and "1.0" as-is via str()
    return str(value)


_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


def _render(template: str, fields: dict) -> str:
    """Substitute {name} placeholders; literal braces elsewhere stay put."""

    def sub(m):
        name = m.group(1)
        if name not in fields:
            raise AssertionFailed(f"template needs parameter {name!r}")
        return fields[name]

    return _PLACEHOLDER_RE.sub(sub, template)


def _rule_for(kind: str, dialect: str) -> dict:
    rules = load_rules()
    if dialect not in rules:
        raise UnsupportedLayer(f"unknown dialect {dialect!r}")
    rule = rules[dialect]["rules"].get(kind)
    if rule is None or rule.get("unsupported"):
        raise UnsupportedLayer(f"no {dialect} mapping for layer kind {kind!r}")
    return rule


def map_layer(kind: str, params: dict, dialect: str, return_seq: bool = False) -> str:
    """One layer's emitted fragment: a Keras constructor call or a Caffe
    parameter block."""
    rule = _rule_for(kind, dialect)
    _check_assertions(kind, params, rule)
    fields = {k: _fmt(v) for k, v in params.items()}
    if dialect == KERAS:
        fields["seq"] = ", return_sequences=True" if return_seq else ""
        template = rule.get("call") or rule.get("call_multi")
        fields.setdefault("inputs", "...")
        return _render(template, fields)
    if kind == "Conv2D":
        fields["pad"] = str(int(params["filter_size"]) // 2)
    return _render(rule["param"], fields)


# ---------------------------------------------------------------------------


def _ordered(graph: CompGraph) -> list[str]:
    return graph.topological_order()


def _check_graph(graph: CompGraph) -> None:
    report = validate(graph, strict_domains=False)
    if not report.ok:
        raise InvalidGraph(report)


def _var(index: int) -> str:
    return f"v{index}"


def generate_keras(graph: CompGraph, head: bool = True) -> str:
    order = _ordered(graph)
    var = {nid: _var(i) for i, nid in enumerate(order)}
    preds: dict[str, list[str]] = {nid: [] for nid in order}
    for s, d in graph.edges:
        preds[d].append(s)

    imports = load_rules()[KERAS]["imports"]
    symbols = sorted({imports[graph.nodes[nid].kind] for nid in order})
    if head:
        symbols = sorted(set(symbols) | {"Activation"})

    lines = [
        '"""Model definition generated from an abstract computational graph."""',
        "",
        f"from keras.layers import {', '.join(symbols)}",
        "from keras.models import Model",
        "",
    ]
    for nid in order:
        node = graph.nodes[nid]
        rule = _rule_for(node.kind, KERAS)
        _check_assertions(node.kind, node.params, rule)
        fields = {k: _fmt(v) for k, v in node.params.items()}
        fields["seq"] = ", return_sequences=True" if node.return_seq else ""
        if "call_multi" in rule:
            fields["inputs"] = ", ".join(var[p] for p in preds[nid])
            lines.append(f"{var[nid]} = {_render(rule['call_multi'], fields)}")
        else:
            call = _render(rule["call"], fields)
            if preds[nid]:
                lines.append(f"{var[nid]} = {call}({var[preds[nid][0]]})")
            else:
                lines.append(f"{var[nid]} = {call}")
    sinks = [nid for nid in order if all(s != nid for s, _ in graph.edges)]
    out = var[sinks[0]]
    if head:
        lines.append(f'out = Activation("softmax")({out})')
        out = "out"
    inputs = [var[nid] for nid in order if not preds[nid]]
    ins = inputs[0] if len(inputs) == 1 else "[" + ", ".join(inputs) + "]"
    lines += ["", f"model = Model(inputs={ins}, outputs={out})", ""]
    return "\n".join(lines)


def generate_caffe(graph: CompGraph, head: bool = True) -> str:
    order = _ordered(graph)
    preds: dict[str, list[str]] = {nid: [] for nid in order}
    for s, d in graph.edges:
        preds[d].append(s)

    lines = ['name: "GeneratedNet"']
    for nid in order:
        node = graph.nodes[nid]
        rule = _rule_for(node.kind, CAFFE)
        _check_assertions(node.kind, node.params, rule)
        fields = {k: _fmt(v) for k, v in node.params.items()}
        if node.kind == "Conv2D":
            fields["pad"] = str(int(node.params["filter_size"]) // 2)
        lines.append("layer {")
        lines.append(f'  name: "{nid}"')
        lines.append(f'  type: "{rule["type"]}"')
        for p in preds[nid]:
            lines.append(f'  bottom: "{p}"')
        lines.append(f'  top: "{nid}"')
        param = _render(rule["param"], fields)
        if param:
            lines.append(f"  {param}")
        lines.append("}")
    if head:
        sinks = [nid for nid in order if all(s != nid for s, _ in graph.edges)]
        lines += [
            "layer {",
            '  name: "prob"',
            '  type: "Softmax"',
            f'  bottom: "{sinks[0]}"',
            '  top: "prob"',
            "}",
        ]
    return "\n".join(lines) + "\n"


def generate(graph: CompGraph, dialect: str, head: bool = True) -> str:
    """Full source document for a validated graph; deterministic bytes for
    identical graphs (stable topological order, node-id tie-break)."""
    if dialect not in DIALECTS:
        raise UnsupportedLayer(f"unknown dialect {dialect!r}")
    _check_graph(graph)
    if dialect == KERAS:
        return generate_keras(graph, head)
    return generate_caffe(graph, head)
