"""Fixed monospace bitmap font shipped as a frozen glyph atlas.

The atlas is the single source of truth for both the renderer and the
builtin OCR matcher; cell size is uniform so text is strictly pitched.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np


@lru_cache(maxsize=1)
def glyph_atlas() -> tuple[dict[str, np.ndarray], int, int]:
    """Returns ({char: (cell_h, cell_w) 0/1 array}, cell_h, cell_w)."""
    with resources.files("dlflow.data").joinpath("glyphs.json").open("r") as f:
        doc = json.load(f)
    cell_h, cell_w = doc["cell_h"], doc["cell_w"]
    glyphs = {
        ch: np.array([[int(c) for c in row] for row in rows], dtype=np.uint8)
        for ch, rows in doc["glyphs"].items()
    }
    return glyphs, cell_h, cell_w


def text_bitmap(text: str, scale: int = 1) -> np.ndarray:
    """Rasterize a one-line string to a 0/1 array at the given integer scale."""
    glyphs, cell_h, cell_w = glyph_atlas()
    if not text:
        return np.zeros((cell_h, 0), dtype=np.uint8)
    cells = [glyphs.get(ch, glyphs["?"]) for ch in text]
    bitmap = np.concatenate(cells, axis=1)
    if scale != 1:
        bitmap = np.kron(bitmap, np.ones((scale, scale), dtype=np.uint8))
    return bitmap


def text_size(text: str, scale: int = 1) -> tuple[int, int]:
    _, cell_h, cell_w = glyph_atlas()
    return cell_w * len(text) * scale, cell_h * scale
