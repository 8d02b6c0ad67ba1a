"""Label reading for detected node blobs.

The builtin backend template-matches the shipped glyph atlas against the
binarized crop; an external backend shells out to any command that prints
recognized text for an image path."""

from __future__ import annotations

import subprocess
import tempfile
from functools import lru_cache

import numpy as np
from PIL import Image

from .fontdata import glyph_atlas
from .vision import binarize, connected_components


class OcrBackendError(RuntimeError):
    """External OCR command failed."""


@lru_cache(maxsize=8)
def _glyph_stack(scale: int):
    glyphs, cell_h, cell_w = glyph_atlas()
    chars = sorted(glyphs)
    stack = np.stack(
        [
            np.kron(glyphs[ch], np.ones((scale, scale), dtype=np.uint8))
            for ch in chars
        ]
    ).astype(bool)
    # slight preference for blank cells so stray border pixels do not
    # materialize as punctuation
    bias = np.array([0.0 if ch == " " else 0.5 for ch in chars])
    return chars, stack, bias, cell_h * scale, cell_w * scale


def _interior_ink(crop_bin: np.ndarray) -> np.ndarray:
    """Ink mask of the crop with the border ring (components touching the
    crop boundary) removed."""
    ink = crop_bin == 0
    h, w = ink.shape
    keep = np.zeros_like(ink)
    for pts in connected_components(ink):
        ys, xs = pts[:, 0], pts[:, 1]
        if ys.min() == 0 or xs.min() == 0 or ys.max() == h - 1 or xs.max() == w - 1:
            continue  # touches the crop edge: spill-in from outside
        if (ys.max() - ys.min() + 1) >= 0.85 * h and (xs.max() - xs.min() + 1) >= 0.85 * w:
            continue  # spans the whole crop: the node frame
        keep[ys, xs] = True
    return keep


def read_label_builtin(
    image: np.ndarray,
    bbox: tuple[int, int, int, int],
    block_size: int = 31,
    C: float = 5.0,
) -> str:
    """Exact-pitch template matching of the glyph atlas inside one blob.

    Assumes a single centered text line drawn with the shipped font at an
    integer scale (the renderer's convention); tolerant to a few percent
    of flipped pixels."""
    bx, by, bw, bh = bbox
    h, w = image.shape[:2]
    bx0, by0 = max(0, bx), max(0, by)
    bx1, by1 = min(w, bx + bw), min(h, by + bh)
    if bx1 - bx0 < 8 or by1 - by0 < 8:
        return ""
    crop = image[by0:by1, bx0:bx1]
    pad = 16  # binarize needs context; pad with white
    if crop.ndim == 3:
        padded = np.full((crop.shape[0] + 2 * pad, crop.shape[1] + 2 * pad, 3), 255, np.uint8)
        padded[pad:-pad, pad:-pad] = crop
    else:
        padded = np.full((crop.shape[0] + 2 * pad, crop.shape[1] + 2 * pad), 255, np.uint8)
        padded[pad:-pad, pad:-pad] = crop
    crop_bin = binarize(padded, block_size, C)[pad:-pad, pad:-pad]

    ink = _interior_ink(crop_bin)
    if not ink.any():
        return ""
    ys, xs = np.nonzero(ink)
    total_ink = len(ys)

    scale = max(1, round(bh / 32))
    chars, stack, bias, cell_h, cell_w = _glyph_stack(scale)
    n0 = max(1, round((xs.max() - xs.min() + 1) / cell_w))

    best = None  # (score, text)
    jitters = sorted(
        ((dx, dy) for dy in range(-2, 3) for dx in range(-2, 3)),
        key=lambda p: abs(p[0]) + abs(p[1]),
    )
    for n in (n0, n0 + 1, max(1, n0 - 1), n0 + 2):
        tw, th = n * cell_w, cell_h
        base_x = (crop_bin.shape[1] - tw) // 2
        base_y = (crop_bin.shape[0] - th) // 2
        for dx, dy in jitters:
            x0, y0 = base_x + dx, base_y + dy
            if x0 < 0 or y0 < 0 or x0 + tw > ink.shape[1] or y0 + th > ink.shape[0]:
                continue
            block = ink[y0 : y0 + th, x0 : x0 + tw]
            cells = block.reshape(th, n, cell_w).swapaxes(0, 1)
            # (n, 1, h, w) xor (1, g, h, w) -> per-cell per-glyph mismatch
            diff = np.logical_xor(cells[:, None], stack[None]).sum(axis=(2, 3)) + bias
            idx = diff.argmin(axis=1)
            # ink the window fails to cover counts against it, so a
            # truncated window cannot beat the full-width match
            uncovered = total_ink - int(block.sum())
            score = diff[np.arange(n), idx].sum() + uncovered
            text = "".join(chars[i] for i in idx)
            if best is None or score < best[0]:
                best = (score, text)
            if score <= 0.55 * n:
                return text.strip()  # clean aligned match
    if best is None:
        return ""
    return best[1].strip()


def read_label_external(image: np.ndarray, bbox, command: list[str]) -> str:
    """Run `command <png-path>`; the command must print text and exit 0."""
    bx, by, bw, bh = bbox
    crop = image[max(0, by) : by + bh, max(0, bx) : bx + bw]
    with tempfile.NamedTemporaryFile(suffix=".png", delete=True) as tmp:
        Image.fromarray(crop).save(tmp.name)
        try:
            proc = subprocess.run(
                list(command) + [tmp.name], capture_output=True, text=True, timeout=60
            )
        except OSError as exc:
            raise OcrBackendError(f"cannot run OCR command: {exc}") from exc
    if proc.returncode != 0:
        raise OcrBackendError(f"OCR command exited {proc.returncode}: {proc.stderr.strip()}")
    return proc.stdout.strip()
