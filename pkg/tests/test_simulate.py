import json
from pathlib import Path

import pytest

from dlflow.graph import from_json, validate
from dlflow.simulate import SimConfig, check_sample, sample_model, _model_rng


def test_config_rejects_bad_depth():
    with pytest.raises(ValueError):
        SimConfig(depth_min=3, depth_max=10)
    with pytest.raises(ValueError):
        SimConfig(depth_min=10, depth_max=9)


def test_config_rejects_bad_mix():
    with pytest.raises(ValueError):
        SimConfig(input_mix={"InputMNIST": 0.5, "InputCIFAR10": 0.4})


@pytest.mark.parametrize("depth", [5, 12, 25, 40])
def test_samples_are_valid_with_exact_depth(depth):
    config = SimConfig()
    for index in range(5):
        g = sample_model(config, depth, _model_rng(7, depth, index))
        # depth counts the layers between the Input and the terminal Dense
        assert len(g.nodes) == depth + 2
        report = validate(g)
        assert report.ok, [str(v) for v in report.violations]


def test_determinism_per_model():
    config = SimConfig(seed=3)
    a = sample_model(config, 17, _model_rng(3, 17, 4))
    b = check_sample(config, 17, 4)
    assert a.structurally_equal(b)


def test_streams_independent_of_order():
    # model (d, i) must not depend on which models were generated before it
    config = SimConfig(seed=9)
    later = sample_model(config, 8, _model_rng(9, 8, 2))
    sample_model(config, 8, _model_rng(9, 8, 0))
    again = sample_model(config, 8, _model_rng(9, 8, 2))
    assert later.structurally_equal(again)


def test_generate_dataset_manifest(tmp_path):
    from dlflow.simulate import generate_dataset

    config = SimConfig(depth_min=5, depth_max=6, models_per_depth=3, seed=1)
    manifest = generate_dataset(config, str(tmp_path))
    assert manifest["total_models"] == 6
    assert manifest["counts"] == {"5": 3, "6": 3}
    assert len(manifest["config_hash"]) == 16
    assert json.loads((tmp_path / "manifest.json").read_text()) == manifest
    for fname in manifest["files"]:
        g = from_json((tmp_path / fname).read_text())
        assert validate(g).ok
        assert g.provenance == "simulated"


def test_concat_actually_appears():
    config = SimConfig(concat_probability=0.5)
    kinds = set()
    for index in range(30):
        g = sample_model(config, 20, _model_rng(11, 20, index))
        kinds |= {n.kind for n in g.nodes.values()}
    assert "Concat" in kinds
