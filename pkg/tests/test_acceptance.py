"""End-to-end acceptance suite for the full toolkit.

Each test class corresponds to one gate: simulator validity, round-trip
extraction accuracy, code generation fidelity, classifier quality, table
extraction, evaluation oracles, and the HTTP service.  These run the real
pipelines at scale and take substantially longer than the unit tests.
"""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dlflow.classify import FeatureDataset, Mlp, MlpSpec, evaluate, train
from dlflow.codegen import CAFFE, KERAS, generate
from dlflow.evalmetrics import (
    boxplot,
    evaluate_extraction,
    graph_equivalent,
    graph_equivalent_bruteforce,
)
from dlflow.extract import ExtractorConfig, extract
from dlflow.features import cheap_features
from dlflow.graph import to_json, validate
from dlflow.prototxt import prototxt_check
from dlflow.render import STYLES, render
from dlflow.service import create_app
from dlflow.simulate import SimConfig, _model_rng, sample_model
from dlflow.store import DesignStore
from dlflow.tables import (
    COLUMN_MAJOR,
    ROW_MAJOR,
    CellGrid,
    default_bow_model,
    extract_table_graph,
    is_design_table,
    load_cell_grid,
)
from tests.conftest import build_graph
from tests.test_codegen import FIXTURES, GOLDEN, load_fixture

SEED = 42


class TestSimulatorValidity:
    def test_10800_graphs_all_valid_under_5_minutes(self):
        config = SimConfig(seed=SEED)
        started = time.monotonic()
        n = 0
        for depth in range(5, 41):
            for index in range(300):
                graph = sample_model(config, depth, _model_rng(SEED, depth, index))
                report = validate(graph)
                assert report.ok, (depth, index, [str(v) for v in report.violations])
                n += 1
        elapsed = time.monotonic() - started
        assert n == 10_800
        assert elapsed < 300.0, f"took {elapsed:.1f}s"


class TestRoundTripExtraction:
    @pytest.mark.parametrize("style", STYLES)
    def test_500_renders_blob_and_edge_accuracy(self, style):
        config = SimConfig(seed=SEED)
        records = []
        for i in range(500):
            depth = 5 + (i % 36)  # uniform over depths 5..40
            graph = sample_model(config, depth, _model_rng(SEED, depth, 1000 + i))
            image, sidecar = render(graph, style)
            result = extract(image, ExtractorConfig())
            records.append(evaluate_extraction(result, sidecar, model_id=f"{style}-{i}"))
        blob = boxplot([r.blob_accuracy for r in records])
        edge = boxplot([r.edge_accuracy for r in records])
        assert blob.median == 100.0, blob
        assert blob.mean >= 99.0, blob
        assert edge.median >= 93.0, edge


class TestCodegen:
    @pytest.mark.parametrize("name", ["lenet_like", "concat_branch", "embed_lstm"])
    def test_golden_fixtures_byte_for_byte(self, name):
        graph = load_fixture(name)
        assert generate(graph, KERAS) == (GOLDEN / f"{name}.py").read_text()
        assert generate(graph, CAFFE) == (GOLDEN / f"{name}.prototxt").read_text()

    def test_prototxt_check_on_1000_simulated_graphs(self):
        config = SimConfig(seed=SEED)
        failures = []
        for i in range(1000):
            depth = 5 + (i % 36)
            graph = sample_model(config, depth, _model_rng(SEED, depth, 2000 + i))
            ok, problems = prototxt_check(generate(graph, CAFFE))
            if not ok:
                failures.append((i, problems))
        assert failures == []


class TestClassifiers:
    def test_synthetic_4096d_all_algorithms(self):
        rng = np.random.default_rng(SEED)
        d, n_per = 4096, 2500
        mean = np.zeros(d)
        mean_b = np.full(d, 0.2)
        X = np.concatenate([
            rng.normal(size=(n_per, d)) + mean,
            rng.normal(size=(n_per, d)) + mean_b,
        ]).astype(np.float32)
        y = np.repeat([0, 1], n_per).astype(np.int32)
        dataset = FeatureDataset(X, y, ["a", "b"], seed=SEED)
        for algorithm, kwargs in (
            ("naive_bayes", {}),
            ("logistic_regression", {}),
            ("mlp", {"spec": MlpSpec(hidden=(64,), epochs=10, seed=SEED)}),
        ):
            model = train(dataset, algorithm, **kwargs)
            acc = evaluate(model, dataset)["test"]["accuracy"]
            assert acc >= 0.99, (algorithm, acc)

    def test_style_discrimination_2000_renders(self):
        config = SimConfig(seed=SEED)
        features, labels = [], []
        for i in range(1000):
            depth = 5 + (i % 8)
            graph = sample_model(config, depth, _model_rng(SEED, depth, 3000 + i))
            for label, style in enumerate(STYLES):
                image, _ = render(graph, style)
                features.append(cheap_features(image))
                labels.append(label)
        X = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.int32)
        dataset = FeatureDataset(X, y, list(STYLES), seed=SEED)
        model = train(dataset, "mlp", spec=MlpSpec(hidden=(1024, 256), seed=SEED))
        acc = evaluate(model, dataset)["test"]["accuracy"]
        assert acc >= 0.95, acc

    def test_mlp_gradient_check_1e4(self):
        rng = np.random.default_rng(SEED)
        mlp = Mlp(MlpSpec(hidden=(16, 8), seed=SEED))
        X = rng.normal(size=(20, 10))
        y = rng.integers(0, 4, size=20).astype(np.int64)
        mlp._init_params(10, 4)
        for b in mlp.b_:  # keep pre-activations off the relu kink
            b += rng.normal(scale=0.1, size=b.shape)
        _, gW, gb = mlp.loss_and_grads(X, y)
        eps = 1e-6
        worst = 0.0
        for param, grad in [*zip(mlp.W_, gW), *zip(mlp.b_, gb)]:
            flat, gflat = param.reshape(-1), np.asarray(grad).reshape(-1)
            for k in range(0, len(flat), max(1, len(flat) // 20)):
                orig = flat[k]
                flat[k] = orig + eps
                lp, _, _ = mlp.loss_and_grads(X, y)
                flat[k] = orig - eps
                lm, _, _ = mlp.loss_and_grads(X, y)
                flat[k] = orig
                num = (lp - lm) / (2 * eps)
                denom = max(abs(num), abs(gflat[k]), 1e-12)
                worst = max(worst, abs(num - gflat[k]) / denom)
        assert worst < 1e-4, worst


class TestTableEngine:
    CHAIN = [
        ["layer", "size", "stride"],
        ["conv", "5", ""],
        ["maxpool", "2", "2"],
        ["flatten", "", ""],
        ["fc 100", "", ""],
        ["fc 10", "", ""],
    ]
    EXPECTED = ["Conv2D", "MaxPool2D", "Flatten", "Dense", "Dense"]

    def test_row_major_fixture(self):
        graph, skipped = extract_table_graph(CellGrid(rows=self.CHAIN), ROW_MAJOR)
        assert skipped == []
        assert [graph.nodes[n].kind for n in graph.topological_order()] == self.EXPECTED

    def test_column_major_transpose_invariance(self):
        grid = CellGrid(rows=self.CHAIN)
        a, _ = extract_table_graph(grid, ROW_MAJOR)
        b, _ = extract_table_graph(grid.transpose(), COLUMN_MAJOR)
        assert a.structurally_equal(b)
        assert [b.nodes[n].kind for n in b.topological_order()] == self.EXPECTED

    def test_corpus_separation_zero_errors(self):
        from tests.test_tables import CORPUS

        model = default_bow_model()
        errors = []
        for path in sorted(CORPUS.glob("*.csv")):
            design, _ = is_design_table(load_cell_grid(str(path)), model)
            if design != path.name.startswith("design"):
                errors.append(path.name)
        assert len(list(CORPUS.glob("design_*.csv"))) >= 20
        assert len(list(CORPUS.glob("results_*.csv"))) >= 20
        assert errors == []


class TestEvalOracle:
    def test_graph_equivalent_200_random_pairs(self):
        rng = np.random.default_rng(SEED)
        kinds = ["Dense", "Flatten", "Dropout", "Concat", "Conv2D"]
        agreements = 0
        for _ in range(200):
            n = int(rng.integers(2, 9))
            nodes = [(f"a{i}", kinds[int(rng.integers(0, len(kinds)))], {})
                     for i in range(n)]
            edges = [(f"a{i}", f"a{j}") for i in range(n) for j in range(i + 1, n)
                     if rng.random() < 0.35]
            a = build_graph(nodes, edges)
            if rng.random() < 0.5:  # relabelled copy
                perm = rng.permutation(n)
                b = build_graph(
                    [(f"b{perm[i]}", k, p) for i, (_, k, p) in enumerate(nodes)],
                    [(f"b{perm[int(s[1:])]}", f"b{perm[int(d[1:])]}") for s, d in edges],
                )
            else:  # mutate one kind
                mutated = list(nodes)
                i = int(rng.integers(0, n))
                mutated[i] = (mutated[i][0], "LSTM", {"nodes": 5})
                b = build_graph(mutated, edges)
            assert graph_equivalent(a, b) == graph_equivalent_bruteforce(a, b)
            agreements += 1
        assert agreements == 200

    def test_quartiles_match_hand_computed(self):
        stats = boxplot([float(v) for v in range(1, 101)])
        assert (stats.q1, stats.median, stats.q3) == (25.75, 50.5, 75.25)
        assert (stats.min, stats.max, stats.mean) == (1.0, 100.0, 50.5)


class TestService:
    @pytest.fixture
    def client(self, tmp_path):
        return TestClient(create_app(DesignStore(tmp_path / "store")))

    def test_crud_lifecycle(self, client, lenet_like):
        doc = json.loads(to_json(lenet_like))
        created = client.post("/api/v1/designs", json={"graph": doc})
        assert created.status_code == 201
        design_id = created.json()["id"]

        assert client.get(f"/api/v1/designs/{design_id}").status_code == 200
        updated = client.put(
            f"/api/v1/designs/{design_id}",
            json={"graph": doc, "version": created.json()["version"]},
        )
        assert updated.status_code == 200
        rated = client.post(f"/api/v1/designs/{design_id}/ratings", json={"stars": 5})
        assert rated.status_code == 200 and rated.json()["count"] == 1
        assert client.delete(f"/api/v1/designs/{design_id}").status_code == 204
        assert client.get(f"/api/v1/designs/{design_id}").status_code == 404

    def test_codegen_64_nodes_under_1s(self, client):
        nodes = [
            ("n0", "InputMNIST", {}),
            ("n1", "Conv2D", {"filters": 16, "filter_size": 3}),
            ("n2", "Flatten", {}),
        ]
        edges = [("n0", "n1"), ("n1", "n2")]
        prev = "n2"
        for i in range(3, 64):
            nodes.append((f"n{i}", "Dense", {"nodes": 50}))
            edges.append((prev, f"n{i}"))
            prev = f"n{i}"
        graph = build_graph(nodes, edges)
        assert len(graph.nodes) == 64
        doc = json.loads(to_json(graph))
        for dialect in ("keras", "caffe"):
            started = time.monotonic()
            r = client.post(f"/api/v1/codegen/{dialect}", json=doc)
            elapsed = time.monotonic() - started
            assert r.status_code == 200
            assert elapsed < 1.0, (dialect, elapsed)

    @pytest.mark.parametrize("name", ["lenet_like", "concat_branch", "embed_lstm"])
    def test_cli_service_codegen_byte_parity(self, client, tmp_path, capsys, name):
        from dlflow.cli import main

        graph_path = FIXTURES / f"{name}.dlg.json"
        doc = json.loads(graph_path.read_text())
        for dialect, suffix in ((KERAS, "py"), (CAFFE, "prototxt")):
            out = tmp_path / f"{name}.{suffix}"
            assert main(["codegen", "--in", str(graph_path),
                         "--target", dialect, "--out", str(out)]) == 0
            capsys.readouterr()
            r = client.post(f"/api/v1/codegen/{dialect}", json=doc)
            assert r.status_code == 200
            assert r.json()["code"] == out.read_text()

    def test_optimistic_locking_exactly_one_409(self, client, embed_lstm):
        doc = json.loads(to_json(embed_lstm))
        created = client.post("/api/v1/designs", json={"graph": doc})
        design_id = created.json()["id"]
        version = created.json()["version"]
        statuses = [
            client.put(
                f"/api/v1/designs/{design_id}",
                json={"graph": doc, "version": version},
            ).status_code
            for _ in range(2)
        ]
        assert sorted(statuses) == [200, 409]
