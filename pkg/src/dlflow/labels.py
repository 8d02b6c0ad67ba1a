"""Node label text: formatting for the renderer, lexicon-based spell
correction and parameter parsing for the extractor."""

from __future__ import annotations

import json
import re
from importlib import resources

from .graph import PARAM_DOMAINS, RECURRENT_KINDS


class NoMatch(ValueError):
    """OCR text too far from every lexicon alias."""


def load_lexicon() -> dict[str, list[str]]:
    with resources.files("dlflow.data").joinpath("lexicon.json").open("r") as f:
        return json.load(f)


_DEFAULT_LEXICON: dict[str, list[str]] | None = None


def default_lexicon() -> dict[str, list[str]]:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_lexicon()
    return _DEFAULT_LEXICON


# Positional parameter order inside the label parentheses, per kind.
_PARAM_ORDER = {
    "Dense": ("nodes",),
    "Dropout": ("probability",),
    "Conv2D": ("filters", "filter_size"),
    "MaxPool2D": ("filter_size", "stride"),
    "AvgPool2D": ("filter_size", "stride"),
    "Embed": ("embed_size", "vocab"),
    "SimpleRNN": ("units",),
    "LSTM": ("nodes",),
}


def format_label(kind: str, params: dict, return_seq: bool = False) -> str:
    """Human-readable node label, e.g. ``Conv2D (32, 5x5)``."""
    order = _PARAM_ORDER.get(kind, ())
    parts = []
    for key in order:
        val = params.get(key)
        if val is None:
            continue
        if kind == "Conv2D" and key == "filter_size":
            parts.append(f"{val}x{val}")
        else:
            parts.append(str(val))
    if kind in RECURRENT_KINDS and return_seq:
        parts.append("seq")
    if parts:
        return f"{kind} ({', '.join(parts)})"
    return kind


def levenshtein(a: str, b: str, bound: int | None = None) -> int:
    """Plain edit distance with an optional early-out bound."""
    if a == b:
        return 0
    if len(a) > len(b):
        a, b = b, a
    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, 1):
        cur = [j]
        for i, ca in enumerate(a, 1):
            cur.append(min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + (ca != cb)))
        if bound is not None and min(cur) > bound:
            return bound + 1
        prev = cur
    return prev[-1]


_PAREN_RE = re.compile(r"\(([^)]*)\)")
_NUM_RE = re.compile(r"\d+(?:\.\d+)?")


def correct_label(
    raw: str,
    lexicon: dict[str, list[str]] | None = None,
    max_edit_distance: int = 2,
) -> tuple[str, dict | None, bool]:
    """Resolve noisy OCR text to (kind, params-or-None, return_seq).

    The token before any parenthesis is matched case-insensitively against
    every lexicon alias; minimal edit distance wins, ties broken by lexicon
    order.  Raises NoMatch past the distance bound.
    """
    lexicon = lexicon or default_lexicon()
    head = raw.split("(")[0].strip().lower()
    head = re.sub(r"[^a-z0-9\- ]", "", head)
    best_kind, best_dist = None, max_edit_distance + 1
    for kind, aliases in lexicon.items():
        for alias in aliases:
            d = levenshtein(head, alias.lower(), bound=max_edit_distance)
            if d < best_dist:
                best_kind, best_dist = kind, d
    if best_kind is None:
        raise NoMatch(f"no lexicon entry within distance {max_edit_distance} of {raw!r}")

    params: dict | None = None
    return_seq = False
    m = _PAREN_RE.search(raw)
    if m:
        inner = m.group(1)
        return_seq = "seq" in inner.lower() and best_kind in RECURRENT_KINDS
        numbers = _NUM_RE.findall(inner)
        order = _PARAM_ORDER.get(best_kind, ())
        if best_kind == "Conv2D" and "x" in inner:
            # "32, 5x5" -> filters=32, filter_size=5
            pass
        if numbers and order:
            params = {}
            vals = [float(n) if "." in n else int(n) for n in numbers]
            if best_kind == "Conv2D" and len(vals) >= 3:
                vals = vals[:2]  # "5x5" contributed two numbers
            for key, val in zip(order, vals):
                params[key] = val
    return best_kind, params, return_seq


def fallback_params(kind: str) -> dict:
    """Table-midpoint defaults for layers whose parameters were not read."""
    out = {}
    for key, dom in PARAM_DOMAINS.get(kind, {}).items():
        out[key] = dom[len(dom) // 2]
    return out
