"""Design tables: cell-grid handoff format, bag-of-words design/results
classification, row/column orientation, and extraction of a sequential
computational graph."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .graph import CompGraph, LayerNode
from .labels import NoMatch, correct_label, default_lexicon, _PARAM_ORDER

ROW_MAJOR = "RowMajor"
COLUMN_MAJOR = "ColumnMajor"


class EmptyDesign(ValueError):
    """No table row or column resolved to a known layer."""


# ---------------------------------------------------------------------------
# CellGrid


@dataclass
class CellGrid:
    rows: list[list[str]]
    caption: str = ""

    def __post_init__(self):
        width = max((len(r) for r in self.rows), default=0)
        self.rows = [list(r) + [""] * (width - len(r)) for r in self.rows]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def transpose(self) -> "CellGrid":
        return CellGrid(rows=[list(c) for c in zip(*self.rows)], caption=self.caption)

    @classmethod
    def from_csv(cls, text: str) -> "CellGrid":
        caption = ""
        lines = []
        for line in text.splitlines():
            if line.startswith("# caption:"):
                caption = line[len("# caption:") :].strip()
            elif line.startswith("#"):
                continue
            else:
                lines.append(line)
        rows = [row for row in csv.reader(io.StringIO("\n".join(lines))) if row]
        return cls(rows=rows, caption=caption)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.caption:
            buf.write(f"# caption: {self.caption}\n")
        csv.writer(buf, lineterminator="\n").writerows(self.rows)
        return buf.getvalue()

    @classmethod
    def from_json(cls, payload: str | dict) -> "CellGrid":
        data = json.loads(payload) if isinstance(payload, str) else payload
        return cls(rows=data["rows"], caption=data.get("caption", ""))

    def to_json(self) -> dict:
        return {"caption": self.caption, "rows": self.rows}


def load_cell_grid(path) -> CellGrid:
    text = open(path).read()
    if str(path).endswith(".json"):
        return CellGrid.from_json(text)
    return CellGrid.from_csv(text)


# ---------------------------------------------------------------------------
# Bag-of-words design/results classifier

_DESIGN_TERMS = [
    "layer", "type", "architecture", "network", "input", "output",
    "activation", "relu", "softmax", "sigmoid", "tanh", "kernel", "stride",
    "pad", "padding", "filter", "filters", "units", "nodes", "size", "shape",
    "channels", "depth", "hidden", "features",
]
_RESULTS_TERMS = [
    "accuracy", "error", "precision", "recall", "f1", "score", "loss",
    "test", "train", "training", "validation", "val", "dataset", "method",
    "approach", "baseline", "ours", "results", "performance", "mean", "std",
    "top", "epoch", "epochs", "time", "rank", "model", "benchmark",
]

_TOKEN_RE = re.compile(r"[a-z]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _default_vocabulary() -> list[str]:
    terms: list[str] = []
    for aliases in default_lexicon().values():
        for alias in aliases:
            terms.extend(tokenize(alias))
    terms.extend(_DESIGN_TERMS)
    terms.extend(_RESULTS_TERMS)
    seen = set()
    vocab = []
    for t in terms:
        if t not in seen:
            seen.add(t)
            vocab.append(t)
    return vocab


@dataclass
class BowModel:
    vocabulary: list[str]
    design_prototype: np.ndarray
    results_prototype: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {t: i for i, t in enumerate(self.vocabulary)}
        for name in ("design_prototype", "results_prototype"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            norm = np.linalg.norm(v)
            if norm == 0:
                raise ValueError(f"{name} is the zero vector")
            setattr(self, name, v / norm)

    @classmethod
    def from_corpus(
        cls,
        design_grids: list[CellGrid],
        results_grids: list[CellGrid],
        vocabulary: list[str] | None = None,
    ) -> "BowModel":
        vocab = vocabulary or _default_vocabulary()
        model = cls.__new__(cls)
        model.vocabulary = vocab
        model._index = {t: i for i, t in enumerate(vocab)}

        def prototype(grids):
            acc = np.zeros(len(vocab))
            for g in grids:
                acc += bow_vector(g, model)
            return acc

        return cls(vocab, prototype(design_grids), prototype(results_grids))


def bow_vector(grid: CellGrid, model: BowModel) -> np.ndarray:
    """L2-normalized term frequencies of caption + cells over the model's
    vocabulary; stays zero when nothing matches."""
    v = np.zeros(len(model.vocabulary))
    tokens = tokenize(grid.caption)
    for row in grid.rows:
        for cell in row:
            tokens.extend(tokenize(cell))
    for t in tokens:
        i = model._index.get(t)
        if i is not None:
            v[i] += 1
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def is_design_table(grid: CellGrid, model: BowModel) -> tuple[bool, float]:
    """(decision, score); score is cosine-to-design minus cosine-to-results.
    An all-zero grid vector is never a design table."""
    v = bow_vector(grid, model)
    if not v.any():
        return False, 0.0
    score = float(v @ model.design_prototype - v @ model.results_prototype)
    return score > 0, score


@lru_cache(maxsize=1)
def default_bow_model() -> BowModel:
    """Model built from the shipped seed corpora."""
    root = resources.files("dlflow.data").joinpath("table_corpus")
    design, results = [], []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".csv"):
            continue
        grid = CellGrid.from_csv(entry.read_text())
        (design if entry.name.startswith("design") else results).append(grid)
    return BowModel.from_corpus(design, results)


# ---------------------------------------------------------------------------
# Orientation


def _is_layer_token(cell: str, lexicon: dict) -> bool:
    try:
        _parse_layer_cell(cell, lexicon)
        return True
    except NoMatch:
        return False


def orientation(grid: CellGrid) -> str:
    """Layer-lexicon hits down the first column (below the header row)
    versus across the first row (right of the header column); the denser
    axis wins, ties go to the longer axis."""
    lexicon = default_lexicon()
    col_hits = sum(_is_layer_token(row[0], lexicon) for row in grid.rows[1:])
    row_hits = sum(_is_layer_token(cell, lexicon) for cell in grid.rows[0][1:]) if grid.rows else 0
    if col_hits > row_hits:
        return ROW_MAJOR
    if row_hits > col_hits:
        return COLUMN_MAJOR
    return COLUMN_MAJOR if grid.n_cols > grid.n_rows else ROW_MAJOR


# ---------------------------------------------------------------------------
# Graph extraction

_NUM_RE = re.compile(r"\d+(?:\.\d+)?")


def _parse_layer_cell(cell: str, lexicon: dict) -> tuple[str, dict, bool]:
    """Layer-name cell -> (kind, positional params, return_seq).

    Handles "conv(64,3)", "fc-4096" (separated numbers are parameters) and
    "conv1"/"fc6" (short attached digits are layer indices, dropped)."""
    raw = cell.strip()
    if not raw:
        raise NoMatch("empty cell")
    if "(" in raw:
        kind, params, return_seq = correct_label(raw, lexicon)
        return kind, params or {}, return_seq
    m = re.match(r"([A-Za-z][A-Za-z ]*)(.*)$", raw)
    if not m:
        raise NoMatch(f"no layer name in {cell!r}")
    name, rest = m.group(1).strip(), m.group(2)
    kind, _, return_seq = correct_label(name, lexicon)
    numbers = _NUM_RE.findall(rest)
    params: dict = {}
    if numbers and not (len(numbers) == 1 and rest == numbers[0] and len(numbers[0]) <= 2):
        vals = [float(n) if "." in n else int(n) for n in numbers]
        for key, val in zip(_PARAM_ORDER.get(kind, ()), vals):
            params[key] = val
    if "seq" in rest.lower():
        return_seq = True
    return kind, params, return_seq


@lru_cache(maxsize=1)
def _header_rules() -> dict:
    with resources.files("dlflow.data").joinpath("header_params.json").open() as f:
        return json.load(f)


def _header_slot(header: str) -> str | None:
    norm = " ".join(tokenize(header))
    slots = _header_rules()["slots"]
    if norm in slots:
        return slots[norm]
    for key in sorted(slots, key=len, reverse=True):
        if key in norm:
            return slots[key]
    return None


def _header_params(kind: str, headers: list[str], cells: list[str]) -> dict:
    rules = _header_rules()["params"]
    out: dict = {}
    for header, cell in zip(headers, cells):
        slot = _header_slot(header)
        if slot is None:
            continue
        param = rules[slot].get(kind)
        if param is None:
            continue
        m = _NUM_RE.search(cell)
        if m:
            n = m.group(0)
            out[param] = float(n) if "." in n else int(n)
    return out


def extract_table_graph(grid: CellGrid, orient: str) -> tuple[CompGraph, list[str]]:
    """Sequential chain from a design table; returns (graph, skipped
    layer-axis labels that matched no lexicon entry)."""
    g = grid if orient == ROW_MAJOR else grid.transpose()
    if not g.rows:
        raise EmptyDesign("empty grid")
    headers = g.rows[0]
    lexicon = default_lexicon()

    graph = CompGraph(provenance="extracted_table")
    skipped: list[str] = []
    prev_id: str | None = None
    for row in g.rows[1:]:
        name_cell = row[0]
        try:
            kind, params, return_seq = _parse_layer_cell(name_cell, lexicon)
        except NoMatch:
            if name_cell.strip():
                skipped.append(name_cell.strip())
            continue
        header_vals = _header_params(kind, headers[1:], row[1:])
        merged = dict(params)
        merged.update(header_vals)
        nid = f"t{len(graph.nodes)}"
        graph.nodes[nid] = LayerNode(nid, kind, merged, return_seq)
        if prev_id is not None:
            graph.edges.append((prev_id, nid))
        prev_id = nid
    if not graph.nodes:
        raise EmptyDesign("no table row or column resolved to a layer")
    return graph, skipped
