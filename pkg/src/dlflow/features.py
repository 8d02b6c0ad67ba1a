"""Feature plumbing for figure classification: a cheap self-contained
image descriptor plus readers/writers for the binary feature-file format
(and a CSV alternative) used to consume precomputed vectors."""

from __future__ import annotations

import csv
import struct

import numpy as np

from .vision import to_grayscale

MAGIC = b"DLPF"


class DecodeError(ValueError):
    pass


def cheap_features(image: np.ndarray) -> np.ndarray:
    """320-d descriptor: 16x16 block-averaged intensities (scaled to
    [0, 1]) concatenated with a 64-bin gradient-orientation histogram
    (magnitude-weighted, L2-normalized)."""
    if not isinstance(image, np.ndarray) or image.ndim not in (2, 3) or image.size == 0:
        raise DecodeError("expected a nonempty HxW or HxWx3 array")
    gray = to_grayscale(image)
    h, w = gray.shape
    if h < 2 or w < 2:
        raise DecodeError("image too small for gradients")

    iy = (np.arange(h) * 16) // h
    ix = (np.arange(w) * 16) // w
    sums = np.zeros((16, 16))
    counts = np.zeros((16, 16))
    np.add.at(sums, (iy[:, None], ix[None, :]), gray)
    np.add.at(counts, (iy[:, None], ix[None, :]), 1.0)
    thumb = (sums / counts).ravel() / 255.0

    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)  # [-pi, pi]
    bins = np.minimum((ang + np.pi) / (2 * np.pi) * 64, 63.999).astype(int)
    hist = np.bincount(bins.ravel(), weights=mag.ravel(), minlength=64)[:64]
    norm = np.linalg.norm(hist)
    if norm > 0:
        hist = hist / norm
    return np.concatenate([thumb, hist])


# ---------------------------------------------------------------------------
# binary feature files: header {magic, u32 N, u32 D} then N*D float32,
# little-endian; labels live in a sibling file of N int32


def save_features(path, X: np.ndarray) -> None:
    X = np.asarray(X, dtype="<f4")
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", X.shape[0], X.shape[1]))
        fh.write(X.tobytes(order="C"))


def load_features(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) != 12 or head[:4] != MAGIC:
            raise DecodeError(f"{path}: not a feature file")
        n, d = struct.unpack("<II", head[4:])
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != n * d:
        raise DecodeError(f"{path}: expected {n * d} floats, found {data.size}")
    return data.reshape(n, d).astype(np.float64)


def save_labels(path, y) -> None:
    np.asarray(y, dtype="<i4").tofile(path)


def load_labels(path) -> np.ndarray:
    return np.fromfile(path, dtype="<i4").astype(np.int64)


def save_features_csv(path, X: np.ndarray, y=None) -> None:
    X = np.asarray(X)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{i}" for i in range(X.shape[1])]
        if y is not None:
            header.append("label")
        writer.writerow(header)
        for i, row in enumerate(X):
            out = [repr(float(v)) for v in row]
            if y is not None:
                out.append(int(y[i]))
            writer.writerow(out)


def load_features_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_labels = header and header[-1] == "label"
        X, y = [], []
        for row in reader:
            if not row:
                continue
            if has_labels:
                X.append([float(v) for v in row[:-1]])
                y.append(int(row[-1]))
            else:
                X.append([float(v) for v in row])
    return np.array(X), (np.array(y, dtype=np.int64) if has_labels else None)
