import os

import numpy as np
import pytest

from knowdag.errors import IngestionError, ParameterError
from knowdag.graphs import DirectedGraph, generate_er_dag
from knowdag.sem import (
    DataMatrix,
    draw_index_model,
    load_csv_dataset,
    simulate_from_model,
    simulate_index_sem,
    write_sem_metadata,
)


class TestSimulation:
    def test_pure_noise_for_empty_graph(self):
        truth = DirectedGraph(3)
        data = simulate_index_sem(truth, n=10_000, noise_scale=1.0, seed=8)
        assert np.all(np.abs(data.values.mean(axis=0)) < 0.05)
        assert np.all(np.abs(data.values.var(axis=0) - 1.0) < 0.1)

    def test_noise_free_limit_matches_mechanism(self):
        truth = DirectedGraph(2, frozenset({(0, 1)}))
        model = draw_index_model(truth, noise_scale=1e-8, seed=3)
        data = simulate_from_model(truth, model, n=500, seed=3)
        x0 = data.values[:, 0]
        mech = (
            np.tanh(x0 * model.a1[0, 1])
            + np.cos(x0 * model.a2[0, 1])
            + np.sin(x0 * model.a3[0, 1])
        )
        assert np.max(np.abs(data.values[:, 1] - mech)) < 1e-6

    def test_benchmark_scale_shape(self):
        truth = generate_er_dag(10, 10, seed=0)
        data = simulate_index_sem(truth, n=200, seed=0)
        assert data.values.shape == (200, 10)
        assert np.all(np.isfinite(data.values))

    def test_deterministic_per_seed(self):
        truth = generate_er_dag(6, 6, seed=1)
        a = simulate_index_sem(truth, 50, 1.0, seed=2)
        b = simulate_index_sem(truth, 50, 1.0, seed=2)
        c = simulate_index_sem(truth, 50, 1.0, seed=3)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_coefficients_only_on_parent_slots(self):
        truth = generate_er_dag(6, 8, seed=9)
        model = draw_index_model(truth, 1.0, seed=9)
        for a in (model.a1, model.a2, model.a3):
            for j in range(6):
                parents = set(truth.parents(j))
                nz = set(np.flatnonzero(a[:, j]).tolist())
                assert nz == parents
                for i in parents:
                    assert 0.5 <= abs(a[i, j]) <= 2.0

    def test_rejects_cyclic_graph(self):
        cyc = DirectedGraph(2, frozenset({(0, 1), (1, 0)}))
        model = draw_index_model(DirectedGraph(2, frozenset({(0, 1)})), 1.0, 0)
        with pytest.raises(ParameterError):
            simulate_from_model(cyc, model, 10, 0)

    def test_parent_correlation_beats_independent(self):
        truth = DirectedGraph(3, frozenset({(0, 1)}))  # node 2 independent
        wins = 0
        for seed in range(100):
            x = simulate_index_sem(truth, 1000, 1.0, seed=seed).values
            linked = abs(np.corrcoef(x[:, 0], x[:, 1])[0, 1])
            free = abs(np.corrcoef(x[:, 0], x[:, 2])[0, 1])
            wins += linked > free
        assert wins >= 95

    def test_metadata_sidecar(self, tmp_path):
        truth = DirectedGraph(2, frozenset({(0, 1)}))
        model = draw_index_model(truth, 1.0, seed=4)
        write_sem_metadata(tmp_path / "meta.json", 4, "truth.edges", model)
        import json

        meta = json.loads((tmp_path / "meta.json").read_text())
        assert meta["seed"] == 4
        assert np.array_equal(np.array(meta["a1"]), model.a1)


class TestLoadCsv:
    def test_zeros(self, tmp_path):
        path = tmp_path / "z.csv"
        path.write_text("0,0\n0,0\n0,0\n")
        data = load_csv_dataset(path)
        assert data.values.shape == (3, 2)
        assert np.all(data.values == 0)

    def test_header_autodetect(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\r\n1,2\r\n3,4\r\n")
        data = load_csv_dataset(path)
        assert data.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_ragged_row_diagnostic(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(IngestionError, match="row 2"):
            load_csv_dataset(path)

    def test_non_numeric_diagnostic(self, tmp_path):
        path = tmp_path / "n.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(IngestionError, match="row 2, column 2"):
            load_csv_dataset(path)

    def test_standardize(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.normal(3.0, 2.5, size=(40, 3))
        path = tmp_path / "s.csv"
        path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in values))
        data = load_csv_dataset(path, standardize=True)
        assert np.all(np.abs(data.values.mean(axis=0)) < 1e-10)
        assert np.all(np.abs(data.values.var(axis=0) - 1.0) < 1e-10)

    def test_zero_variance_standardize_rejected(self, tmp_path):
        path = tmp_path / "zv.csv"
        path.write_text("1,5\n2,5\n3,5\n")
        with pytest.raises(IngestionError, match="column 2"):
            load_csv_dataset(path, standardize=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            load_csv_dataset(tmp_path / "nope.csv")

    def test_data_matrix_rejects_non_finite(self):
        with pytest.raises(ParameterError):
            DataMatrix(np.array([[1.0, np.nan]]))

    @pytest.mark.skipif(
        not os.environ.get("KNOWDAG_SACHS_CSV"),
        reason="set KNOWDAG_SACHS_CSV to the protein-signaling dataset file",
    )
    def test_sachs_dataset_shape(self):
        data = load_csv_dataset(os.environ["KNOWDAG_SACHS_CSV"])
        assert data.n == 7466
        assert data.d == 11
