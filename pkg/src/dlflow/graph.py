"""Abstract computational graph IR: layer kinds, hyper-parameter domains,
the layer-adjacency grammar, tensor-shape inference and graph validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SCHEMA_ID = "dlp2c/1"

# Layer kinds.  The four Input kinds are the only sources.
INPUT_KINDS = ("InputMNIST", "InputCIFAR10", "InputImageNet", "InputIMDBText")
LAYER_KINDS = INPUT_KINDS + (
    "Dense",
    "Conv2D",
    "Flatten",
    "Dropout",
    "MaxPool2D",
    "AvgPool2D",
    "Concat",
    "Embed",
    "SimpleRNN",
    "LSTM",
)

RECURRENT_KINDS = ("SimpleRNN", "LSTM")

# Input image shapes and class counts.
INPUT_SHAPES = {
    "InputMNIST": (28, 28, 1),
    "InputCIFAR10": (32, 32, 3),
    "InputImageNet": (224, 224, 3),
}
INPUT_CLASSES = {
    "InputMNIST": 10,
    "InputCIFAR10": 10,
    "InputImageNet": 1000,
    "InputIMDBText": 2,
}
DEFAULT_SEQ_LEN = 100

# Hyper-parameter domains per kind (strict-mode validation and sampling).
PARAM_DOMAINS = {
    "Dense": {"nodes": list(range(5, 501, 5))},
    "Dropout": {"probability": [round(0.1 * i, 1) for i in range(11)]},
    "Conv2D": {
        "filters": list(range(16, 257, 16)),
        "filter_size": [1, 3, 5, 7, 9, 11],
    },
    "MaxPool2D": {"stride": [2, 3, 4, 5], "filter_size": [1, 3, 5, 7, 9, 11]},
    "AvgPool2D": {"stride": [2, 3, 4, 5], "filter_size": [1, 3, 5, 7, 9, 11]},
    "Embed": {
        "embed_size": [64, 100, 128, 200],
        "vocab": [10000, 20000, 50000, 75000],
    },
    "SimpleRNN": {"units": list(range(3, 26))},
    "LSTM": {"nodes": list(range(3, 26))},
    "Concat": {},
    "Flatten": {},
    "InputMNIST": {},
    "InputCIFAR10": {},
    "InputImageNet": {},
    "InputIMDBText": {},
}


# ---------------------------------------------------------------------------
# Tensor shapes


@dataclass(frozen=True)
class Vec:
    n: int


@dataclass(frozen=True)
class Map3D:
    h: int
    w: int
    c: int


@dataclass(frozen=True)
class Seq:
    t: int
    d: int


@dataclass(frozen=True)
class TokenSeq:
    t: int


TensorShape = Vec | Map3D | Seq | TokenSeq


class ShapeError(ValueError):
    """Raised when a layer cannot consume its input shape(s)."""


class RankMismatch(ShapeError):
    pass


class ShapeUnderflow(ShapeError):
    pass


class ConcatIncompatible(ShapeError):
    pass


class StructuralError(ValueError):
    """Dangling references, cycles, missing inputs."""


# ---------------------------------------------------------------------------
# Grammar (layer adjacency)

# Grammar symbols: recurrent layers fold their return_seq flag into the
# symbol, so SimpleRNN/LSTM each map to two symbols.
SYM_INPUT = "Input"
SYM_DENSE = "Dense"
SYM_CONV = "Conv2D"
SYM_FLATTEN = "Flatten"
SYM_DROPOUT = "Dropout"
SYM_MAXPOOL = "MaxPool"
SYM_AVGPOOL = "AvgPool"
SYM_CONCAT = "Concat"
SYM_EMBED = "Embed"
SYM_RNN = "RNN"
SYM_RNN_SEQ = "RNN(seq)"
SYM_LSTM = "LSTM"
SYM_LSTM_SEQ = "LSTM(seq)"

_RNN_ROW = frozenset({SYM_DENSE, SYM_DROPOUT, SYM_CONCAT, SYM_EMBED})
_SEQ_ROW = frozenset(
    {SYM_FLATTEN, SYM_DROPOUT, SYM_CONCAT, SYM_RNN, SYM_RNN_SEQ, SYM_LSTM, SYM_LSTM_SEQ}
)
_POOL_ROW = frozenset(
    {SYM_CONV, SYM_FLATTEN, SYM_DROPOUT, SYM_MAXPOOL, SYM_AVGPOOL, SYM_CONCAT}
)

GRAMMAR_TABLE: dict[str, frozenset[str]] = {
    SYM_INPUT: frozenset({SYM_DENSE, SYM_CONV, SYM_EMBED}),
    SYM_DENSE: frozenset({SYM_DENSE, SYM_DROPOUT, SYM_CONCAT, SYM_EMBED}),
    SYM_CONV: _POOL_ROW,
    SYM_FLATTEN: frozenset({SYM_DENSE, SYM_DROPOUT, SYM_CONCAT, SYM_EMBED}),
    SYM_MAXPOOL: _POOL_ROW,
    SYM_AVGPOOL: _POOL_ROW,
    SYM_RNN: _RNN_ROW,
    SYM_RNN_SEQ: _SEQ_ROW,
    # Non-seq LSTM deliberately mirrors the RNN row; the published table's
    # LSTM row marks Conv2D instead of Dense, which is shape-impossible for
    # a Vec output and is kept below only as a record of the source.
    SYM_LSTM: _RNN_ROW,
    SYM_LSTM_SEQ: _SEQ_ROW,
    # The source table has no Embed row; successors restricted to the
    # consumers of its Seq output.
    SYM_EMBED: frozenset({SYM_RNN, SYM_RNN_SEQ, SYM_LSTM, SYM_LSTM_SEQ}),
}

# Literal transcription of the published LSTM (non-seq) row, unused by the
# grammar (see comment above).
LSTM_ROW_AS_PRINTED = frozenset({SYM_CONV, SYM_DROPOUT, SYM_CONCAT, SYM_EMBED})


def grammar_symbol(kind: str, return_seq: bool = False) -> str:
    """Map a layer kind (+ return_seq flag) to its grammar symbol."""
    if kind in INPUT_KINDS:
        return SYM_INPUT
    if kind == "SimpleRNN":
        return SYM_RNN_SEQ if return_seq else SYM_RNN
    if kind == "LSTM":
        return SYM_LSTM_SEQ if return_seq else SYM_LSTM
    if kind == "MaxPool2D":
        return SYM_MAXPOOL
    if kind == "AvgPool2D":
        return SYM_AVGPOOL
    return kind


# ---------------------------------------------------------------------------
# Graph model


@dataclass
class LayerNode:
    id: str
    kind: str
    params: dict = field(default_factory=dict)
    return_seq: bool = False

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind: {self.kind!r}")
        if self.return_seq and self.kind not in RECURRENT_KINDS:
            raise ValueError(f"return_seq is not valid for {self.kind}")


@dataclass
class CompGraph:
    """Directed acyclic graph of typed layers with hyper-parameters."""

    nodes: dict[str, LayerNode] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)
    name: str = ""
    provenance: str = "unknown"

    def add_node(self, node: LayerNode) -> LayerNode:
        if node.id in self.nodes:
            raise StructuralError(f"duplicate node id {node.id!r}")
        self.nodes[node.id] = node
        return node

    def add_edge(self, src: str, dst: str) -> None:
        for nid in (src, dst):
            if nid not in self.nodes:
                raise StructuralError(f"edge references missing node {nid!r}")
        self.edges.append((src, dst))

    def predecessors(self, node_id: str) -> list[str]:
        return [s for s, d in self.edges if d == node_id]

    def successors(self, node_id: str) -> list[str]:
        return [d for s, d in self.edges if s == node_id]

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with node-id tie-break; raises on cycles."""
        indeg = {nid: 0 for nid in self.nodes}
        for _, d in self.edges:
            indeg[d] += 1
        ready = sorted(nid for nid, k in indeg.items() if k == 0)
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            changed = False
            for d in self.successors(nid):
                indeg[d] -= 1
                if indeg[d] == 0:
                    ready.append(d)
                    changed = True
            if changed:
                ready.sort()
        if len(order) != len(self.nodes):
            raise StructuralError("graph contains a cycle")
        return order

    def structurally_equal(self, other: "CompGraph") -> bool:
        if set(self.nodes) != set(other.nodes):
            return False
        for nid, node in self.nodes.items():
            o = other.nodes[nid]
            if (node.kind, node.params, node.return_seq) != (o.kind, o.params, o.return_seq):
                return False
        return self.edges == other.edges


# ---------------------------------------------------------------------------
# Shape inference


def infer_shape(
    kind: str,
    params: dict,
    inputs: list[TensorShape],
    return_seq: bool = False,
    seq_len: int = DEFAULT_SEQ_LEN,
) -> TensorShape:
    """Output shape of one layer given its input shapes.

    Conv2D is same-padding stride 1; pools are valid-padding with the
    configured kernel/stride.  Raises a ShapeError subclass when the layer
    cannot consume its inputs.
    """
    if kind in INPUT_KINDS:
        if inputs:
            raise RankMismatch(f"{kind} takes no inputs")
        if kind == "InputIMDBText":
            return TokenSeq(seq_len)
        return Map3D(*INPUT_SHAPES[kind])

    if kind != "Concat" and len(inputs) != 1:
        raise RankMismatch(f"{kind} expects exactly one input, got {len(inputs)}")

    if kind == "Dense":
        (x,) = inputs
        if not isinstance(x, Vec):
            raise RankMismatch(f"Dense requires a vector input, got {type(x).__name__}")
        return Vec(params["nodes"])

    if kind == "Conv2D":
        (x,) = inputs
        if not isinstance(x, Map3D):
            raise RankMismatch(f"Conv2D requires a 3-d map input, got {type(x).__name__}")
        return Map3D(x.h, x.w, params["filters"])

    if kind in ("MaxPool2D", "AvgPool2D"):
        (x,) = inputs
        if not isinstance(x, Map3D):
            raise RankMismatch(f"{kind} requires a 3-d map input, got {type(x).__name__}")
        k, s = params["filter_size"], params["stride"]
        h = (x.h - k) // s + 1
        w = (x.w - k) // s + 1
        if h < 1 or w < 1:
            raise ShapeUnderflow(f"pool output {h}x{w} below 1 for input {x.h}x{x.w}")
        return Map3D(h, w, x.c)

    if kind == "Flatten":
        (x,) = inputs
        if isinstance(x, Map3D):
            return Vec(x.h * x.w * x.c)
        if isinstance(x, Seq):
            return Vec(x.t * x.d)
        raise RankMismatch(f"Flatten requires a map or sequence, got {type(x).__name__}")

    if kind == "Dropout":
        return inputs[0]

    if kind == "Embed":
        (x,) = inputs
        if not isinstance(x, TokenSeq):
            raise RankMismatch(f"Embed requires a token sequence, got {type(x).__name__}")
        return Seq(x.t, params["embed_size"])

    if kind in RECURRENT_KINDS:
        (x,) = inputs
        if not isinstance(x, Seq):
            raise RankMismatch(f"{kind} requires an embedded sequence, got {type(x).__name__}")
        units = params["units"] if kind == "SimpleRNN" else params["nodes"]
        return Seq(x.t, units) if return_seq else Vec(units)

    if kind == "Concat":
        if len(inputs) < 2:
            raise RankMismatch("Concat requires at least two inputs")
        first = inputs[0]
        if all(isinstance(x, Vec) for x in inputs):
            return Vec(sum(x.n for x in inputs))
        if all(isinstance(x, Map3D) for x in inputs):
            if any((x.h, x.w) != (first.h, first.w) for x in inputs):
                raise ConcatIncompatible("Concat inputs differ in spatial dims")
            return Map3D(first.h, first.w, sum(x.c for x in inputs))
        if all(isinstance(x, Seq) for x in inputs):
            if any(x.t != first.t for x in inputs):
                raise ConcatIncompatible("Concat inputs differ in time dim")
            return Seq(first.t, sum(x.d for x in inputs))
        raise ConcatIncompatible("Concat inputs have mixed ranks")

    raise ValueError(f"unknown layer kind {kind!r}")


def infer_all_shapes(graph: CompGraph, seq_len: int = DEFAULT_SEQ_LEN) -> dict[str, TensorShape]:
    """Shapes for every node, in topological order.  Incoming edges keep
    their declared order (defines Concat input order)."""
    shapes: dict[str, TensorShape] = {}
    for nid in graph.topological_order():
        node = graph.nodes[nid]
        ins = [shapes[s] for s, d in graph.edges if d == nid]
        shapes[nid] = infer_shape(node.kind, node.params, ins, node.return_seq, seq_len)
    return shapes


# ---------------------------------------------------------------------------
# Effective grammar symbol (Dropout / Concat passthrough)


def effective_kind(
    graph: CompGraph, node_id: str, shapes: dict[str, TensorShape] | None = None
) -> str:
    """Grammar symbol of a node for adjacency purposes.

    Dropout takes its predecessor's symbol; Concat takes Dense when its
    output is rank-1, otherwise its first input's symbol; resolution is
    transitive.
    """
    if node_id not in graph.nodes:
        raise StructuralError(f"no such node {node_id!r}")
    node = graph.nodes[node_id]
    if node.kind == "Concat":
        if shapes is None:
            shapes = infer_all_shapes(graph)
        if isinstance(shapes[node_id], Vec):
            return SYM_DENSE
    if node.kind in ("Dropout", "Concat"):
        preds = graph.predecessors(node_id)
        if not preds:
            raise StructuralError(f"{node.kind} node {node_id!r} has no predecessor")
        return effective_kind(graph, preds[0], shapes)
    return grammar_symbol(node.kind, node.return_seq)


def allowed_next(
    graph: CompGraph, node_id: str, shapes: dict[str, TensorShape] | None = None
) -> frozenset[str]:
    """Set of grammar symbols permitted to follow the given node."""
    return GRAMMAR_TABLE[effective_kind(graph, node_id, shapes)]


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    category: str  # Structure | GrammarAdjacency | ShapeError | ParamDomain
    locus: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, category: str, locus: str, message: str) -> None:
        self.violations.append(Violation(category, locus, message))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"category": v.category, "locus": v.locus, "message": v.message}
                for v in self.violations
            ],
        }


def validate(graph: CompGraph, strict_domains: bool = True) -> ValidationReport:
    """Structural, grammar-adjacency, shape and parameter-domain checks.

    Violations are data, not exceptions; an empty report means valid.
    """
    report = ValidationReport()

    for s, d in graph.edges:
        for nid in (s, d):
            if nid not in graph.nodes:
                report.add("Structure", f"edge {s}->{d}", f"unknown node {nid!r}")
    for nid, node in graph.nodes.items():
        if node.kind not in LAYER_KINDS:
            report.add("Structure", nid, f"unresolved layer kind {node.kind!r}")
    if not report.ok:
        return report

    try:
        order = graph.topological_order()
    except StructuralError as exc:
        report.add("Structure", "graph", str(exc))
        return report

    indeg = {nid: len(graph.predecessors(nid)) for nid in graph.nodes}
    outdeg = {nid: len(graph.successors(nid)) for nid in graph.nodes}

    inputs = [nid for nid, n in graph.nodes.items() if n.kind in INPUT_KINDS]
    if len(inputs) != 1:
        report.add("Structure", "graph", f"expected exactly one Input node, found {len(inputs)}")
    for nid in inputs:
        if indeg[nid] != 0:
            report.add("Structure", nid, "Input node has incoming edges")

    for nid, node in graph.nodes.items():
        if node.kind in INPUT_KINDS:
            continue
        if node.kind == "Concat":
            if indeg[nid] < 2:
                report.add("Structure", nid, f"Concat in-degree {indeg[nid]} < 2")
        elif indeg[nid] != 1:
            report.add("Structure", nid, f"{node.kind} in-degree {indeg[nid]} != 1")

    sinks = [nid for nid in graph.nodes if outdeg[nid] == 0]
    if len(sinks) != 1:
        report.add("Structure", "graph", f"expected exactly one sink, found {len(sinks)}")

    if strict_domains:
        for nid, node in graph.nodes.items():
            domains = PARAM_DOMAINS[node.kind]
            for key, dom in domains.items():
                if key not in node.params:
                    report.add("ParamDomain", nid, f"{node.kind} missing parameter {key!r}")
                elif node.kind == "Dense" and key == "nodes" and nid in sinks:
                    # The terminal Dense is the class-count head; any
                    # positive width is legal there.
                    if not (isinstance(node.params[key], int) and node.params[key] >= 1):
                        report.add("ParamDomain", nid, "terminal Dense.nodes must be a positive int")
                elif node.params[key] not in dom:
                    report.add(
                        "ParamDomain",
                        nid,
                        f"{node.kind}.{key}={node.params[key]!r} outside its domain",
                    )
            for key in node.params:
                if key not in domains:
                    report.add("ParamDomain", nid, f"{node.kind} has unknown parameter {key!r}")

    # The remaining passes run even when structure or domain violations
    # exist, so a half-edited graph still reports grammar problems on the
    # specific offending edges; unverifiable edges are simply skipped.

    # Shape inference along topological order; first failure per node wins.
    shapes: dict[str, TensorShape] = {}
    for nid in order:
        node = graph.nodes[nid]
        ins = [shapes[s] for s, d in graph.edges if d == nid and s in shapes]
        if len(ins) != len(graph.predecessors(nid)):
            continue  # an upstream node already failed
        try:
            shapes[nid] = infer_shape(node.kind, node.params, ins, node.return_seq)
        except ShapeError as exc:
            report.add("ShapeError", nid, str(exc))

    for s, d in graph.edges:
        dst = graph.nodes[d]
        dst_sym = grammar_symbol(dst.kind, dst.return_seq)
        try:
            permitted = allowed_next(graph, s, shapes)
            source_sym = effective_kind(graph, s, shapes)
        except (KeyError, StructuralError):
            continue  # source symbol unresolvable (upstream failure)
        if dst_sym not in permitted:
            report.add(
                "GrammarAdjacency",
                f"edge {s}->{d}",
                f"{dst_sym} may not follow {source_sym}",
            )
    return report


# ---------------------------------------------------------------------------
# JSON serialization


class ParseError(ValueError):
    """Malformed or schema-violating graph JSON."""


class SchemaVersionMismatch(ParseError):
    pass


def to_json(graph: CompGraph, indent: int | None = 2) -> str:
    nodes = []
    for nid in graph.nodes:
        node = graph.nodes[nid]
        entry: dict = {"id": nid, "kind": node.kind, "params": node.params}
        if node.kind in RECURRENT_KINDS:
            entry["return_seq"] = node.return_seq
        nodes.append(entry)
    doc = {
        "schema": SCHEMA_ID,
        "name": graph.name,
        "provenance": graph.provenance,
        "nodes": nodes,
        "edges": [[s, d] for s, d in graph.edges],
    }
    return json.dumps(doc, indent=indent) + "\n"


def from_json(text: str, strict: bool = True) -> CompGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("schema") != SCHEMA_ID:
        raise SchemaVersionMismatch(f"unsupported schema {doc.get('schema')!r}")
    known = {"schema", "name", "provenance", "nodes", "edges"}
    if strict:
        extra = set(doc) - known
        if extra:
            raise ParseError(f"unknown top-level fields: {sorted(extra)}")
    graph = CompGraph(name=doc.get("name", ""), provenance=doc.get("provenance", "unknown"))
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise ParseError("field 'nodes' must be a non-empty list")
    for i, entry in enumerate(nodes):
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            raise ParseError(f"nodes[{i}]: each node needs 'id' and 'kind'")
        if strict:
            extra = set(entry) - {"id", "kind", "params", "return_seq"}
            if extra:
                raise ParseError(f"nodes[{i}]: unknown fields {sorted(extra)}")
        nid = entry["id"]
        if not isinstance(nid, str):
            raise ParseError(f"nodes[{i}]: id must be a string")
        if entry.get("return_seq") and entry["kind"] not in RECURRENT_KINDS:
            raise ParseError(f"nodes[{i}]: return_seq invalid for kind {entry['kind']}")
        try:
            node = LayerNode(
                id=nid,
                kind=entry["kind"],
                params=dict(entry.get("params", {})),
                return_seq=bool(entry.get("return_seq", False)),
            )
        except ValueError as exc:
            raise ParseError(f"nodes[{i}]: {exc}") from exc
        if nid in graph.nodes:
            raise ParseError(f"nodes[{i}]: duplicate id {nid!r}")
        graph.nodes[nid] = node
    edges = doc.get("edges", [])
    if not isinstance(edges, list):
        raise ParseError("field 'edges' must be a list")
    for i, pair in enumerate(edges):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ParseError(f"edges[{i}]: must be a [src, dst] pair")
        s, d = pair
        for nid in (s, d):
            if nid not in graph.nodes:
                raise ParseError(f"edges[{i}]: unknown node {nid!r}")
        graph.edges.append((s, d))
    if not any(n.kind in INPUT_KINDS for n in graph.nodes.values()):
        raise ParseError("graph has no Input node")
    return graph
