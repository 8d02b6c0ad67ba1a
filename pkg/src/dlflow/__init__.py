"""Diagram-to-code toolkit for deep-learning model designs: a typed
computational-graph IR, a grammar-driven design simulator, a flow-diagram
renderer and parser, table extraction, figure classifiers, and Keras/Caffe
code generation."""

from .graph import (
    CompGraph,
    LayerNode,
    ValidationReport,
    from_json,
    infer_all_shapes,
    to_json,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CompGraph",
    "LayerNode",
    "ValidationReport",
    "from_json",
    "infer_all_shapes",
    "to_json",
    "validate",
    "__version__",
]
