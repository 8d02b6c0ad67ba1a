"""Vision primitives for flow-diagram parsing, implemented from their
textbook definitions: adaptive Gaussian thresholding, Sobel/Canny edge
detection, connected-component labelling and Moore-neighbour contour
tracing."""

from __future__ import annotations

import numpy as np


class ImageTooSmall(ValueError):
    pass


def to_grayscale(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return image.astype(np.float64)
    # ITU-R 601 luminance
    return (
        0.299 * image[..., 0] + 0.587 * image[..., 1] + 0.114 * image[..., 2]
    ).astype(np.float64)


def _gaussian_kernel(size: int) -> np.ndarray:
    sigma = 0.3 * ((size - 1) * 0.5 - 1) + 0.8
    x = np.arange(size) - (size - 1) / 2
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def _sep_filter(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable correlation with reflect padding."""
    r = len(kernel) // 2
    pad = np.pad(img, ((r, r), (0, 0)), mode="reflect")
    out = np.zeros_like(img)
    for i, w in enumerate(kernel):
        out += w * pad[i : i + img.shape[0], :]
    pad = np.pad(out, ((0, 0), (r, r)), mode="reflect")
    out2 = np.zeros_like(img)
    for i, w in enumerate(kernel):
        out2 += w * pad[:, i : i + img.shape[1]]
    return out2


def binarize(image: np.ndarray, block_size: int = 31, C: float = 5.0) -> np.ndarray:
    """Adaptive Gaussian threshold; returns {0, 255} with ink = 0.

    The per-pixel threshold is the Gaussian-weighted local mean over a
    block_size window minus C.
    """
    if block_size < 3 or block_size % 2 == 0:
        raise ValueError("block_size must be an odd integer >= 3")
    gray = to_grayscale(image)
    if min(gray.shape) < block_size:
        raise ImageTooSmall(f"image {gray.shape} smaller than block size {block_size}")
    thresh = _sep_filter(gray, _gaussian_kernel(block_size)) - C
    return np.where(gray > thresh, 255, 0).astype(np.uint8)


# ---------------------------------------------------------------------------
# Canny


def canny(binary: np.ndarray, low: float = 50.0, high: float = 150.0) -> np.ndarray:
    """Canny edges of an image: Sobel gradients, non-maximum suppression
    along the quantized gradient direction, then hysteresis.  Returns a
    boolean edge map."""
    if low >= high:
        raise ValueError("canny_low must be < canny_high")
    img = binary.astype(np.float64)
    p = np.pad(img, 1, mode="edge")
    gx = (
        p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]
        - p[:-2, :-2] - 2 * p[1:-1, :-2] - p[2:, :-2]
    )
    gy = (
        p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]
        - p[:-2, :-2] - 2 * p[:-2, 1:-1] - p[:-2, 2:]
    )
    mag = np.hypot(gx, gy)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180

    # non-maximum suppression via shifted comparisons per direction bin
    m = np.pad(mag, 1, mode="constant")

    def sh(dy, dx):
        return m[1 + dy : m.shape[0] - 1 + dy, 1 + dx : m.shape[1] - 1 + dx]

    d0 = (angle < 22.5) | (angle >= 157.5)
    d45 = (angle >= 22.5) & (angle < 67.5)
    d90 = (angle >= 67.5) & (angle < 112.5)
    d135 = (angle >= 112.5) & (angle < 157.5)
    keep = (
        (d0 & (mag >= sh(0, 1)) & (mag >= sh(0, -1)))
        | (d45 & (mag >= sh(1, 1)) & (mag >= sh(-1, -1)))
        | (d90 & (mag >= sh(1, 0)) & (mag >= sh(-1, 0)))
        | (d135 & (mag >= sh(1, -1)) & (mag >= sh(-1, 1)))
    )
    nms = np.where(keep, mag, 0.0)

    strong = nms >= high
    weak = (nms >= low) & ~strong
    edges = strong.copy()
    while True:
        e = np.pad(edges, 1, mode="constant")
        grown = np.zeros_like(edges)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                grown |= e[1 + dy : e.shape[0] - 1 + dy, 1 + dx : e.shape[1] - 1 + dx]
        new = edges | (weak & grown)
        if (new == edges).all():
            break
        edges = new
    return edges


# ---------------------------------------------------------------------------
# Connected components (8-connectivity) via union-find


def connected_components(mask: np.ndarray) -> list[np.ndarray]:
    """List of (N_i, 2) arrays of (y, x) coordinates, one per component,
    ordered by top-left bounding corner."""
    ys, xs = np.nonzero(mask)
    n = len(ys)
    if n == 0:
        return []
    serial = -np.ones(mask.shape, dtype=np.int64)
    serial[ys, xs] = np.arange(n)
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    h, w = mask.shape
    for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
        y2, x2 = ys + dy, xs + dx
        ok = (y2 >= 0) & (y2 < h) & (x2 >= 0) & (x2 < w)
        a_idx = np.nonzero(ok)[0]
        b = serial[y2[ok], x2[ok]]
        valid = b >= 0
        for a, bb in zip(a_idx[valid], b[valid]):
            ra, rb = find(a), find(bb)
            if ra != rb:
                parent[rb] = ra

    roots = np.array([find(i) for i in range(n)])
    comps: dict[int, list[int]] = {}
    for i, r in enumerate(roots):
        comps.setdefault(r, []).append(i)
    out = []
    for idxs in comps.values():
        pts = np.stack([ys[idxs], xs[idxs]], axis=1)
        out.append(pts)
    out.sort(key=lambda p: (p[:, 0].min(), p[:, 1].min()))
    return out


# ---------------------------------------------------------------------------
# Moore-neighbour boundary tracing

_MOORE = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def trace_boundary(mask: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbour trace of the boundary containing `start` (which must
    be the topmost-leftmost pixel of its component)."""
    h, w = mask.shape

    def ink(y, x):
        return 0 <= y < h and 0 <= x < w and mask[y, x]

    boundary = [start]
    prev_dir = 6  # entered moving left-to-right scan; backtrack points west
    cy, cx = start
    for _ in range(8 * mask.size):
        found = False
        for k in range(8):
            d = (prev_dir + 1 + k) % 8
            dy, dx = _MOORE[d]
            ny, nx = cy + dy, cx + dx
            if ink(ny, nx):
                boundary.append((ny, nx))
                # next search starts from the direction we came from
                prev_dir = (d + 4) % 8
                cy, cx = ny, nx
                found = True
                break
        if not found:
            break  # isolated pixel
        if (cy, cx) == start and len(boundary) > 2:
            break
    return boundary


def polygon_area(points: list[tuple[int, int]]) -> float:
    """Absolute shoelace area of a (y, x) polygon."""
    if len(points) < 3:
        return 0.0
    ys = np.array([p[0] for p in points], dtype=np.float64)
    xs = np.array([p[1] for p in points], dtype=np.float64)
    return abs(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1))) / 2.0


def component_contour(pts: np.ndarray, shape: tuple[int, int]):
    """Trace one component's outer boundary; returns (boundary, area,
    bbox(x, y, w, h), ink_count)."""
    y0, x0 = pts[:, 0].min(), pts[:, 1].min()
    y1, x1 = pts[:, 0].max(), pts[:, 1].max()
    local = np.zeros((y1 - y0 + 3, x1 - x0 + 3), dtype=bool)
    local[pts[:, 0] - y0 + 1, pts[:, 1] - x0 + 1] = True
    ys, xs = np.nonzero(local)
    k = np.lexsort((xs, ys))[0]
    boundary = trace_boundary(local, (ys[k], xs[k]))
    area = polygon_area(boundary)
    bbox = (int(x0), int(y0), int(x1 - x0 + 1), int(y1 - y0 + 1))
    return boundary, area, bbox, len(pts)
