import numpy as np
import pytest

from dlflow.features import (
    DecodeError,
    cheap_features,
    load_features,
    load_features_csv,
    load_labels,
    save_features,
    save_features_csv,
    save_labels,
)


def test_cheap_features_shape_and_range():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(120, 90, 3), dtype=np.uint8)
    v = cheap_features(img)
    assert v.shape == (320,)
    assert (v[:256] >= 0).all() and (v[:256] <= 1).all()


def test_cheap_features_intensity_blocks():
    img = np.full((64, 64), 255, dtype=np.uint8)
    v = cheap_features(img)
    assert np.allclose(v[:256], 1.0)
    # uniform image has no gradients: histogram stays zero
    assert np.allclose(v[256:], 0.0)


def test_gradient_histogram_unit_norm():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
    v = cheap_features(img)
    assert abs(float((v[256:] ** 2).sum()) - 1.0) < 1e-5


def test_binary_round_trip(tmp_path):
    X = np.random.default_rng(2).random((7, 5)).astype(np.float32)
    p = tmp_path / "f.dlpf"
    save_features(str(p), X)
    back = load_features(str(p))
    assert np.array_equal(back, X)
    assert p.read_bytes()[:4] == b"DLPF"


def test_labels_round_trip(tmp_path):
    y = np.array([0, 2, 1, 1, 3], dtype=np.int32)
    p = tmp_path / "f.labels"
    save_labels(str(p), y)
    assert np.array_equal(load_labels(str(p)), y)


def test_corrupt_magic_rejected(tmp_path):
    p = tmp_path / "bad.dlpf"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(DecodeError):
        load_features(str(p))


def test_truncated_payload_rejected(tmp_path):
    X = np.ones((4, 4), dtype=np.float32)
    p = tmp_path / "f.dlpf"
    save_features(str(p), X)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(DecodeError):
        load_features(str(p))


def test_csv_round_trip(tmp_path):
    X = np.random.default_rng(3).random((6, 4)).astype(np.float32)
    y = np.array([0, 1, 0, 2, 1, 2], dtype=np.int32)
    p = tmp_path / "f.csv"
    save_features_csv(str(p), X, y)
    bx, by = load_features_csv(str(p))
    assert np.allclose(bx, X, atol=1e-6)
    assert np.array_equal(by, y)
    header = p.read_text().splitlines()[0]
    assert header.split(",")[-1] == "label"
