"""Command-line entry points for the full pipeline: simulation, rendering,
extraction, table extraction, classification, code generation, evaluation
and the HTTP service."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import codegen
from .graph import from_json, to_json, validate


class CliError(Exception):
    """Domain error; exits with status 1."""


def _parse_depth_range(text: str) -> tuple[int, int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return int(lo), int(hi)
    v = int(text)
    return v, v


def _load_graph(path: str):
    try:
        return from_json(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}")
    except ValueError as exc:
        raise CliError(f"{path}: {exc}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> dict:
    from .simulate import SimConfig, generate_dataset

    lo, hi = _parse_depth_range(args.depth)
    config = SimConfig(
        depth_min=lo,
        depth_max=hi,
        models_per_depth=args.per_depth,
        seed=args.seed,
        concat_probability=args.concat_probability,
    )
    styles = tuple(args.render.split(",")) if args.render else ()
    manifest = generate_dataset(config, args.out, render_styles=styles, render_scale=args.scale)
    return {"out": args.out, "models": sum(manifest["counts"].values())}


def cmd_render(args) -> dict:
    from .render import InvalidGraph, render, save_artifact

    graph = _load_graph(getattr(args, "in"))
    try:
        image, sidecar = render(graph, args.style, scale=args.scale)
    except (InvalidGraph, ValueError) as exc:
        raise CliError(str(exc))
    save_artifact(image, sidecar, args.out)
    return {"out": args.out, "nodes": len(sidecar["nodes"]), "edges": len(sidecar["edges"])}


def cmd_extract(args) -> dict:
    from .extract import ExtractorConfig, extract
    from .render import load_image

    config = ExtractorConfig(
        ocr_backend=args.ocr,
        ocr_command=args.ocr_cmd.split() if args.ocr_cmd else None,
        executable_fallback=args.executable_fallback,
    )
    try:
        image = load_image(getattr(args, "in"))
    except OSError as exc:
        raise CliError(f"cannot read image: {exc}")
    result = extract(image, config)
    Path(args.out).write_text(to_json(result.graph))
    return {"out": args.out, **result.diagnostics}


def cmd_table_extract(args) -> dict:
    from .tables import (
        EmptyDesign,
        default_bow_model,
        extract_table_graph,
        is_design_table,
        load_cell_grid,
        orientation,
    )

    try:
        grid = load_cell_grid(getattr(args, "in"))
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read table: {exc}")
    design, score = is_design_table(grid, default_bow_model())
    if not design and not args.force:
        raise CliError(f"not a design table (score {score:.3f}); --force to extract anyway")
    orient = args.orientation or orientation(grid)
    try:
        graph, skipped = extract_table_graph(grid, orient)
    except EmptyDesign as exc:
        raise CliError(str(exc))
    Path(args.out).write_text(to_json(graph))
    return {"out": args.out, "orientation": orient, "score": round(score, 3), "skipped": skipped}


def cmd_classify(args) -> dict:
    from .classify import FeatureDataset, MlpSpec, evaluate, load_model, save_model, train
    from .features import load_features, load_labels

    X = load_features(args.features)
    y = load_labels(args.labels)
    names = [str(c) for c in sorted(set(int(v) for v in y))]
    dataset = FeatureDataset(X, y, names, seed=args.seed)
    if args.mode == "train":
        kwargs = {}
        if args.algorithm == "mlp":
            kwargs["spec"] = MlpSpec(epochs=args.epochs, seed=args.seed)
        try:
            model = train(dataset, args.algorithm, **kwargs)
        except ValueError as exc:
            raise CliError(str(exc))
        save_model(model, args.out)
        report = evaluate(model, dataset)
        return {"out": args.out, **{s: report[s]["accuracy"] for s in report}}
    model = load_model(args.model)
    report = evaluate(model, dataset)
    return {split: report[split] for split in report}


def cmd_codegen(args) -> dict:
    graph = _load_graph(getattr(args, "in"))
    try:
        code = codegen.generate(graph, args.target, head=not args.no_head)
    except (codegen.InvalidGraph, codegen.UnsupportedLayer, codegen.AssertionFailed) as exc:
        raise CliError(str(exc))
    if args.out:
        Path(args.out).write_text(code)
        return {"out": args.out, "bytes": len(code)}
    sys.stdout.write(code)
    return {}


def cmd_eval(args) -> dict:
    from .evalmetrics import (
        boxplot,
        evaluate_extraction,
        write_records_csv,
        write_report_json,
    )
    from .extract import ExtractorConfig, extract
    from .render import load_image

    renders = sorted(Path(args.renders).glob("*.png"))
    if not renders:
        raise CliError(f"no .png files under {args.renders}")
    records = []
    for png in renders:
        gt_path = png.with_suffix("").with_suffix(".gt.json")
        if not gt_path.exists():
            gt_path = Path(str(png)[:-4] + ".gt.json")
        if not gt_path.exists():
            raise CliError(f"missing sidecar for {png}")
        truth = json.loads(gt_path.read_text())
        result = extract(load_image(str(png)), ExtractorConfig())
        records.append(evaluate_extraction(result, truth, model_id=png.stem))
    write_records_csv(records, args.out)
    if args.json:
        write_report_json(records, args.json)
    blob = boxplot([r.blob_accuracy for r in records])
    edge = boxplot([r.edge_accuracy for r in records])
    return {
        "out": args.out,
        "n": len(records),
        "blob_mean": round(blob.mean, 2),
        "blob_median": blob.median,
        "edge_mean": round(edge.mean, 2),
        "edge_median": edge.median,
    }


def cmd_serve(args) -> dict:
    import uvicorn

    from .service import create_app
    from .store import DesignStore, ENV_STORE

    root = args.store or os.environ.get(ENV_STORE)
    if root is None:
        raise CliError(f"no store path: use --store or set {ENV_STORE}")
    app = create_app(DesignStore(root))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return {}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlflow", description=__doc__)
    parser.add_argument("--format", choices=["text", "json"], default="text",
                        help="error/result reporting format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a dataset of valid model designs")
    p.add_argument("--per-depth", type=int, default=10)
    p.add_argument("--depth", default="5:40", help="depth or lo:hi range")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--concat-probability", type=float, default=0.15)
    p.add_argument("--render", default="", help="comma-separated styles to render")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("render", help="render a graph to a flow-diagram PNG")
    p.add_argument("--in", required=True)
    p.add_argument("--style", default="StyleK", choices=["StyleK", "StyleC"])
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("extract", help="parse a flow-diagram image into a graph")
    p.add_argument("--in", required=True)
    p.add_argument("--ocr", default="builtin", choices=["builtin", "external"])
    p.add_argument("--ocr-cmd", default="")
    p.add_argument("--executable-fallback", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("table-extract", help="extract a design from a cell grid")
    p.add_argument("--in", required=True)
    p.add_argument("--orientation", choices=["RowMajor", "ColumnMajor"])
    p.add_argument("--force", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_table_extract)

    p = sub.add_parser("classify", help="train or evaluate a feature classifier")
    p.add_argument("--mode", choices=["train", "eval"], default="train")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--algorithm", default="mlp",
                   choices=["naive_bayes", "logistic_regression", "mlp"])
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", help="model file for --mode eval")
    p.add_argument("--out", help="model file for --mode train")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("codegen", help="emit source code for a graph")
    p.add_argument("--in", required=True)
    p.add_argument("--target", required=True, choices=list(codegen.DIALECTS))
    p.add_argument("--no-head", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_codegen)

    p = sub.add_parser("eval", help="score extraction over a render directory")
    p.add_argument("--renders", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "classify":
        if args.mode == "train" and not args.out:
            parser.error("--mode train needs --out")
        if args.mode == "eval" and not args.model:
            parser.error("--mode eval needs --model")
    try:
        result = args.func(args)
    except CliError as exc:
        if args.format == "json":
            print(json.dumps({"error": str(exc)}), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1
    if result:
        if args.format == "json":
            print(json.dumps(result))
        else:
            print(" ".join(f"{k}={v}" for k, v in result.items()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
