import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from knowdag.graphs import DirectedGraph
from knowdag.sem import simulate_index_sem
from knowdag.service import create_app

SOLVER = {"hidden": 3, "inner_max_iter": 150, "max_outer": 25}


def dataset_csv(seed=101, n=300):
    truth = DirectedGraph(2, frozenset({(0, 1)}))
    data = simulate_index_sem(truth, n=n, noise_scale=1.0, seed=seed)
    return "\n".join(",".join(repr(float(v)) for v in row) for row in data.values)


def wait_idle(client, session_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/sessions/{session_id}").json()
        if not state["busy"]:
            return state
        time.sleep(0.05)
    raise TimeoutError("fit did not finish in time")


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "sessions")
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def session(client):
    resp = client.post("/sessions", json={
        "dataset_csv": dataset_csv(), "seed": 1, "solver": SOLVER,
        "truth_edges": [[0, 1]],
    })
    assert resp.status_code == 201, resp.text
    body = resp.json()
    wait_idle(client, body["id"])
    return body["id"]


class TestLifecycle:
    def test_create_runs_baseline(self, client):
        resp = client.post("/sessions", json={
            "dataset_csv": dataset_csv(), "seed": 1, "solver": SOLVER,
        })
        assert resp.status_code == 201
        body = resp.json()
        assert body["n"] == 300 and body["d"] == 2
        job = client.get(f"/sessions/{body['id']}/jobs/{body['job_id']}").json()
        assert job["status"] in ("queued", "running", "done")
        state = wait_idle(client, body["id"])
        assert state["steps_completed"] == 1
        assert state["graph"] is not None

    def test_malformed_csv_diagnostics(self, client):
        resp = client.post("/sessions", json={"dataset_csv": "1,2\n3\n"})
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "bad_dataset"
        assert "row 2" in body["message"]

    def test_unknown_session_404(self, client):
        resp = client.get("/sessions/nope")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_session"

    def test_unknown_job_404(self, client, session):
        resp = client.get(f"/sessions/{session}/jobs/jobnope")
        assert resp.status_code == 404


class TestState:
    def test_graph_matches_threshold_of_weights(self, client, session):
        state = client.get(f"/sessions/{session}").json()
        w = np.array(state["graph"]["weights"])
        thresh = state["w_thresh"]
        expected = sorted(
            [i, j]
            for i in range(w.shape[0])
            for j in range(w.shape[1])
            if i != j and w[i, j] >= thresh
        )
        assert state["graph"]["edges"] == expected

    def test_metrics_present_with_truth(self, client, session):
        state = client.get(f"/sessions/{session}").json()
        assert state["has_truth"]
        assert set(state["metrics"]) >= {"fdr", "tpr", "fpr", "shd_per_node"}


class TestConstraints:
    def test_empty_list_is_noop(self, client, session):
        before = client.get(f"/sessions/{session}").json()
        resp = client.post(f"/sessions/{session}/constraints", json=[])
        assert resp.status_code == 200
        assert resp.json()["job_id"] is None
        after = client.get(f"/sessions/{session}").json()
        assert after["steps_completed"] == before["steps_completed"]

    def test_conflict_names_pair(self, client, session):
        resp = client.post(f"/sessions/{session}/constraints",
                           json=[{"i": 0, "j": 1, "kind": "active"}])
        assert resp.status_code == 200
        wait_idle(client, session)
        resp = client.post(f"/sessions/{session}/constraints",
                           json=[{"i": 0, "j": 1, "kind": "inactive"}])
        assert resp.status_code == 409
        body = resp.json()
        assert body["code"] == "constraint_conflict"
        assert body["detail"]["pair"] == [0, 1]

    def test_busy_rejected(self, client, session):
        app_store = client.app.state.store
        sess = app_store.get(session)
        sess.busy = True
        try:
            resp = client.post(f"/sessions/{session}/constraints",
                               json=[{"i": 1, "j": 0, "kind": "inactive"}])
            assert resp.status_code == 409
            assert resp.json()["code"] == "busy"
        finally:
            sess.busy = False

    def test_out_of_range_rejected(self, client, session):
        resp = client.post(f"/sessions/{session}/constraints",
                           json=[{"i": 0, "j": 9, "kind": "active"}])
        assert resp.status_code == 422

    def test_constraint_enforced_end_to_end(self, client, session):
        resp = client.post(f"/sessions/{session}/constraints",
                           json=[{"i": 1, "j": 0, "kind": "active"}])
        assert resp.status_code == 200
        job_id = resp.json()["job_id"]
        state = wait_idle(client, session)
        job = client.get(f"/sessions/{session}/jobs/{job_id}").json()
        assert job["status"] == "done"
        assert [1, 0] in state["graph"]["edges"]
        assert state["steps_completed"] == 2
        history = client.get(f"/sessions/{session}/history").json()["steps"]
        assert len(history) == 2
        assert "delta_metrics" in history[1]


class TestProgress:
    def test_job_exposes_solver_progress(self, client, session):
        resp = client.post(f"/sessions/{session}/constraints",
                           json=[{"i": 1, "j": 0, "kind": "active"}])
        job_id = resp.json()["job_id"]
        wait_idle(client, session)
        job = client.get(f"/sessions/{session}/jobs/{job_id}").json()
        assert job["status"] == "done"
        assert job["progress"] is not None
        assert job["progress"]["outer_iter"] >= 0
        assert "h" in job["progress"]


class TestPersistence:
    def test_restart_reconstructs_state(self, tmp_path):
        workdir = tmp_path / "sessions"
        app1 = create_app(workdir)
        with TestClient(app1) as c1:
            resp = c1.post("/sessions", json={
                "dataset_csv": dataset_csv(), "seed": 5, "solver": SOLVER,
            })
            sid = resp.json()["id"]
            state1 = wait_idle(c1, sid)

        app2 = create_app(workdir)
        with TestClient(app2) as c2:
            state2 = c2.get(f"/sessions/{sid}").json()
            assert state2["graph"] == state1["graph"]
            assert state2["steps_completed"] == state1["steps_completed"]
            history = c2.get(f"/sessions/{sid}/history").json()["steps"]
            assert len(history) == 1

    def test_serves_built_frontend_when_present(self, tmp_path):
        static = tmp_path / "dist"
        (static / "assets").mkdir(parents=True)
        (static / "index.html").write_text("<html><body>ui</body></html>")
        app = create_app(tmp_path / "s", static_dir=static)
        with TestClient(app) as c:
            resp = c.get("/")
            assert resp.status_code == 200
            assert "ui" in resp.text

    def test_two_constraints_make_three_steps(self, client, session):
        client.post(f"/sessions/{session}/constraints",
                    json=[{"i": 1, "j": 0, "kind": "inactive"}])
        wait_idle(client, session)
        client.post(f"/sessions/{session}/constraints",
                    json=[{"i": 0, "j": 1, "kind": "active"}])
        state = wait_idle(client, session)
        assert state["steps_completed"] == 3
        assert len(state["knowledge"]) == 2
