"""Grammar-driven random generation of valid computational graphs.

Each model draws from its own Philox counter-based stream keyed by
(seed, depth, index), so generation order (serial or parallel) cannot
change the output.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .graph import (
    DEFAULT_SEQ_LEN,
    GRAMMAR_TABLE,
    INPUT_CLASSES,
    INPUT_KINDS,
    PARAM_DOMAINS,
    SYM_AVGPOOL,
    SYM_CONCAT,
    SYM_CONV,
    SYM_DENSE,
    SYM_DROPOUT,
    SYM_EMBED,
    SYM_FLATTEN,
    SYM_LSTM,
    SYM_LSTM_SEQ,
    SYM_MAXPOOL,
    SYM_RNN,
    SYM_RNN_SEQ,
    CompGraph,
    LayerNode,
    Map3D,
    Seq,
    TokenSeq,
    Vec,
    effective_kind,
    infer_shape,
    to_json,
    validate,
)

# Grammar symbol -> (kind, return_seq)
_SYMBOL_KIND = {
    SYM_DENSE: ("Dense", False),
    SYM_CONV: ("Conv2D", False),
    SYM_FLATTEN: ("Flatten", False),
    SYM_DROPOUT: ("Dropout", False),
    SYM_MAXPOOL: ("MaxPool2D", False),
    SYM_AVGPOOL: ("AvgPool2D", False),
    SYM_CONCAT: ("Concat", False),
    SYM_EMBED: ("Embed", False),
    SYM_RNN: ("SimpleRNN", False),
    SYM_RNN_SEQ: ("SimpleRNN", True),
    SYM_LSTM: ("LSTM", False),
    SYM_LSTM_SEQ: ("LSTM", True),
}


class GenerationFailure(RuntimeError):
    """Random walk dead-ended past the restart budget."""


@dataclass
class SimConfig:
    depth_min: int = 5
    depth_max: int = 40
    models_per_depth: int = 3000
    seed: int = 0
    input_mix: dict[str, float] = field(
        default_factory=lambda: {k: 0.25 for k in INPUT_KINDS}
    )
    concat_probability: float = 0.15
    max_resample_attempts: int = 50
    seq_len: int = DEFAULT_SEQ_LEN

    def __post_init__(self):
        if not (5 <= self.depth_min <= self.depth_max):
            raise ValueError("require 5 <= depth_min <= depth_max")
        if self.models_per_depth < 1:
            raise ValueError("models_per_depth must be >= 1")
        total = sum(self.input_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError("input_mix weights must sum to 1")

    def to_dict(self) -> dict:
        return {
            "depth_min": self.depth_min,
            "depth_max": self.depth_max,
            "models_per_depth": self.models_per_depth,
            "seed": self.seed,
            "input_mix": self.input_mix,
            "concat_probability": self.concat_probability,
            "max_resample_attempts": self.max_resample_attempts,
            "seq_len": self.seq_len,
        }


def _model_rng(seed: int, depth: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, (depth << 32) | index]))


def _min_steps_to_vec(shape) -> int:
    # Steps needed before a terminal Dense is shape-legal.
    if isinstance(shape, Vec):
        return 0
    if isinstance(shape, (Map3D, Seq)):
        return 1
    if isinstance(shape, TokenSeq):
        return 2  # Embed then a non-seq recurrent layer / Flatten
    raise TypeError(shape)


def _shape_after(sym: str, shape, rng: np.random.Generator, seq_len: int):
    """Sample hyper-parameters for `sym` applied to `shape`; returns
    (params, out_shape) or None when no parameter choice is feasible."""
    kind, return_seq = _SYMBOL_KIND[sym]
    domains = PARAM_DOMAINS[kind]
    if kind in ("MaxPool2D", "AvgPool2D"):
        if not isinstance(shape, Map3D):
            return None
        feasible = [
            (k, s)
            for k in domains["filter_size"]
            for s in domains["stride"]
            if (shape.h - k) // s + 1 >= 1 and (shape.w - k) // s + 1 >= 1
        ]
        if not feasible:
            return None
        k, s = feasible[int(rng.integers(len(feasible)))]
        params = {"filter_size": k, "stride": s}
    else:
        params = {key: dom[int(rng.integers(len(dom)))] for key, dom in domains.items()}
    try:
        out = infer_shape(kind, params, [shape], return_seq, seq_len)
    except ValueError:
        return None
    return params, out


def _concat_partners(graph, shapes, frontier_id, frontier_shape):
    """Earlier nodes usable as a second Concat parent: shape-compatible and
    grammar-permitted to feed a Concat."""
    partners = []
    for nid, shape in shapes.items():
        if nid == frontier_id:
            continue
        if isinstance(frontier_shape, Vec) and not isinstance(shape, Vec):
            continue
        if isinstance(frontier_shape, Map3D):
            if not isinstance(shape, Map3D) or (shape.h, shape.w) != (
                frontier_shape.h,
                frontier_shape.w,
            ):
                continue
        if isinstance(frontier_shape, Seq):
            if not isinstance(shape, Seq) or shape.t != frontier_shape.t:
                continue
        if isinstance(frontier_shape, TokenSeq):
            continue
        if SYM_CONCAT not in GRAMMAR_TABLE[effective_kind(graph, nid, shapes)]:
            continue
        partners.append(nid)
    return partners


def sample_model(config: SimConfig, depth: int, rng: np.random.Generator, name: str = "") -> CompGraph:
    """One random valid graph with `depth` layers between the Input and the
    terminal Dense.  Dead-ended walks restart, never emitting an invalid
    graph."""
    if not (config.depth_min <= depth <= config.depth_max):
        raise ValueError(f"depth {depth} outside [{config.depth_min}, {config.depth_max}]")

    for _attempt in range(config.max_resample_attempts):
        graph = _try_walk(config, depth, rng, name)
        if graph is not None:
            return graph
    raise GenerationFailure(f"no valid walk of depth {depth} after {config.max_resample_attempts} restarts")


def _try_walk(config: SimConfig, depth: int, rng, name: str) -> CompGraph | None:
    graph = CompGraph(name=name, provenance="simulated")
    kinds = list(config.input_mix.keys())
    weights = np.array([config.input_mix[k] for k in kinds], dtype=float)
    input_kind = kinds[int(rng.choice(len(kinds), p=weights / weights.sum()))]

    nid = 0
    input_node = graph.add_node(LayerNode(id=f"n{nid:03d}", kind=input_kind))
    shapes = {input_node.id: infer_shape(input_kind, {}, [], seq_len=config.seq_len)}
    frontier = input_node.id

    for step in range(depth):
        remaining = depth - step
        frontier_shape = shapes[frontier]
        allowed = GRAMMAR_TABLE[effective_kind(graph, frontier, shapes)]

        candidates = []
        for sym in sorted(allowed - {SYM_CONCAT}):
            sampled = _shape_after(sym, frontier_shape, _probe_rng(), config.seq_len)
            if sampled is None:
                continue
            # The walk must still be able to reach a Vec for the final Dense.
            kind, return_seq = _SYMBOL_KIND[sym]
            probe_out = sampled[1]
            if _min_steps_to_vec(probe_out) > remaining - 1:
                continue
            candidates.append(sym)

        partners = []
        if SYM_CONCAT in allowed and _min_steps_to_vec(frontier_shape) <= remaining - 1:
            partners = _concat_partners(graph, shapes, frontier, frontier_shape)

        sym = None
        if partners and candidates:
            if rng.random() < config.concat_probability:
                sym = SYM_CONCAT
        elif partners and not candidates:
            sym = SYM_CONCAT
        if sym is None:
            if not candidates:
                return None  # dead end, restart
            sym = candidates[int(rng.integers(len(candidates)))]

        nid += 1
        node_id = f"n{nid:03d}"
        if sym == SYM_CONCAT:
            partner = partners[int(rng.integers(len(partners)))]
            node = graph.add_node(LayerNode(id=node_id, kind="Concat"))
            graph.add_edge(frontier, node_id)
            graph.add_edge(partner, node_id)
            out = infer_shape("Concat", {}, [frontier_shape, shapes[partner]])
        else:
            kind, return_seq = _SYMBOL_KIND[sym]
            sampled = _shape_after(sym, frontier_shape, rng, config.seq_len)
            if sampled is None:
                return None
            params, out = sampled
            node = graph.add_node(
                LayerNode(id=node_id, kind=kind, params=params, return_seq=return_seq)
            )
            graph.add_edge(frontier, node_id)
        shapes[node_id] = out
        frontier = node_id

    if not isinstance(shapes[frontier], Vec):
        return None
    nid += 1
    terminal = f"n{nid:03d}"
    n_classes = INPUT_CLASSES[input_kind]
    graph.add_node(LayerNode(id=terminal, kind="Dense", params={"nodes": n_classes}))
    graph.add_edge(frontier, terminal)
    return graph


def _probe_rng() -> np.random.Generator:
    # Fixed throwaway stream for feasibility probing, so probing never
    # advances the model's own stream.
    return np.random.Generator(np.random.Philox(key=[0, 0]))


# ---------------------------------------------------------------------------
# Batch dataset production


def generate_dataset(
    config: SimConfig,
    out_dir: str,
    render_styles: tuple[str, ...] = (),
    render_scale: int = 1,
) -> dict:
    """Write one graph JSON per model plus a manifest; optionally render
    every model in the requested styles."""
    os.makedirs(out_dir, exist_ok=True)
    counts: dict[str, int] = {}
    files: list[str] = []
    images: list[str] = []
    for depth in range(config.depth_min, config.depth_max + 1):
        counts[str(depth)] = config.models_per_depth
        for index in range(config.models_per_depth):
            rng = _model_rng(config.seed, depth, index)
            model_name = f"sim-d{depth:02d}-{index:05d}"
            graph = sample_model(config, depth, rng, name=model_name)
            fname = f"{model_name}.dlg.json"
            with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as f:
                f.write(to_json(graph))
            files.append(fname)
            for style in render_styles:
                from .render import render, save_artifact

                image, sidecar = render(graph, style, scale=render_scale)
                img_name = f"{model_name}.{style.lower()}.png"
                save_artifact(image, sidecar, os.path.join(out_dir, img_name))
                images.append(img_name)

    cfg = config.to_dict()
    config_hash = hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]
    manifest = {
        "config": cfg,
        "config_hash": config_hash,
        "counts": counts,
        "total_models": len(files),
        "files": files,
        "images": images,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return manifest


def check_sample(config: SimConfig, depth: int, index: int) -> CompGraph:
    """Deterministically regenerate one model of a dataset."""
    rng = _model_rng(config.seed, depth, index)
    graph = sample_model(config, depth, rng, name=f"sim-d{depth:02d}-{index:05d}")
    report = validate(graph)
    if not report.ok:
        raise GenerationFailure(f"regenerated model is invalid: {report.violations}")
    return graph
