"""HTTP session service for expert-in-the-loop structure learning.

A session wraps one dataset plus an optional reference graph. Creating the
session enqueues the baseline fit; the expert then submits batches of edge
constraints, each of which triggers a warm-started refit on a background
worker. State is journaled to disk after every completed fit, and fits are
seeded from the session seed and step index, so restarting the service and
replaying the same constraint history reproduces the same graphs.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .constraints import (
    EdgeConstraint,
    check_consistent,
    constraints_from_json,
    constraints_to_json,
)
from .errors import ConstraintConflictError, IngestionError, ParameterError
from .graphs import DirectedGraph, read_edge_list, structural_metrics
from .model import MlpSem
from .rng import derive_seed
from .sem import DataMatrix, load_csv_dataset, write_csv_dataset
from .solver import SolverConfig, fit


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(message)


@dataclass
class Session:
    id: str
    data: DataMatrix
    dataset_ref: str
    truth: DirectedGraph | None
    config: SolverConfig
    seed: int
    root: Path
    knowledge: tuple[EdgeConstraint, ...] = ()
    history: list[dict] = field(default_factory=list)
    jobs: dict[str, dict] = field(default_factory=dict)
    busy: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def latest_sem(self) -> MlpSem | None:
        if not self.history:
            return None
        return MlpSem.load(self.root / f"step{len(self.history) - 1}.sem.json")


class SessionStore:
    def __init__(self, workdir: Path, executor: ThreadPoolExecutor):
        self.workdir = workdir
        self.executor = executor
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def get(self, session_id: str) -> Session:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            session = self._load_from_disk(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def _load_from_disk(self, session_id: str) -> Session | None:
        root = self.workdir / session_id
        meta_path = root / "meta.json"
        if not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text())
        truth = None
        if meta.get("truth_edges") is not None:
            truth = DirectedGraph(
                meta["truth_d"], frozenset(tuple(e) for e in meta["truth_edges"])
            )
        session = Session(
            id=session_id,
            data=load_csv_dataset(root / "dataset.csv"),
            dataset_ref=meta["dataset_ref"],
            truth=truth,
            config=SolverConfig.from_mapping(meta["solver"]),
            seed=meta["seed"],
            root=root,
        )
        journal = root / "journal.jsonl"
        if journal.exists():
            for line in journal.read_text().splitlines():
                if line.strip():
                    session.history.append(json.loads(line))
        if session.history:
            session.knowledge = constraints_from_json(session.history[-1]["knowledge"])
        with self.lock:
            self.sessions[session_id] = session
        return session

    def create(self, data: DataMatrix, dataset_ref: str, truth, config, seed) -> Session:
        session_id = uuid.uuid4().hex[:12]
        root = self.workdir / session_id
        root.mkdir(parents=True, exist_ok=True)
        write_csv_dataset(data, root / "dataset.csv")
        meta = {
            "dataset_ref": dataset_ref,
            "seed": seed,
            "solver": config.to_mapping(),
            "truth_d": None if truth is None else truth.d,
            "truth_edges": None if truth is None else sorted(truth.edges),
        }
        (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        session = Session(
            id=session_id, data=data, dataset_ref=dataset_ref, truth=truth,
            config=config, seed=seed, root=root,
        )
        with self.lock:
            self.sessions[session_id] = session
        return session


def _graph_payload(edges, weights) -> dict:
    return {"edges": sorted(list(e) for e in edges), "weights": weights}


def _metrics_payload(pred_edges, d, truth: DirectedGraph | None) -> dict | None:
    if truth is None:
        return None
    pred = DirectedGraph(d, frozenset(tuple(e) for e in pred_edges))
    m = structural_metrics(pred, truth)
    return {
        "fdr": m.fdr, "tpr": m.tpr, "fpr": m.fpr, "shd": m.shd,
        "shd_per_node": m.shd_per_node, "tp": m.tp, "reversed": m.reversed,
        "fp": m.fp, "missing": m.missing,
    }


def _run_fit_job(session: Session, job_id: str, constraints, step: int) -> None:
    try:
        with session.lock:
            session.jobs[job_id]["status"] = "running"

        def on_progress(row):
            with session.lock:
                session.jobs[job_id]["progress"] = {
                    "outer_iter": row.outer_iter, "h": row.h,
                    "max_violation": row.max_violation, "rho": row.rho,
                }

        warm = session.latest_sem
        result = fit(
            session.data, constraints, session.config,
            seed=derive_seed(session.seed, 0), warm_start=warm,
            progress=on_progress,
        )
        record = {
            "step": step,
            "knowledge": constraints_to_json(constraints),
            "graph": _graph_payload(result.graph.edges, result.weights.values.tolist()),
            "metrics": _metrics_payload(
                [list(e) for e in result.graph.edges], session.data.d, session.truth
            ),
            "solver_status": result.status,
            "outer_iterations": len(result.log),
            "job_id": job_id,
        }
        if record["metrics"] is not None and step >= 1:
            prev = session.history[step - 1]["metrics"]
            record["delta_metrics"] = {
                key: record["metrics"][key] - prev[key]
                for key in ("fdr", "tpr", "fpr", "shd_per_node")
            }
        result.sem.save(session.root / f"step{step}.sem.json")
        with session.lock:
            session.history.append(record)
            with (session.root / "journal.jsonl").open("a") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            session.jobs[job_id]["status"] = "done"
            session.busy = False
    except Exception as exc:  # surface through job status, not a dead thread
        with session.lock:
            session.jobs[job_id]["status"] = "failed"
            session.jobs[job_id]["error"] = f"{type(exc).__name__}: {exc}"
            session.busy = False


def _enqueue_fit(store: SessionStore, session: Session, constraints) -> str:
    job_id = f"job{len(session.jobs)}"
    session.jobs[job_id] = {"status": "queued", "error": None, "progress": None}
    session.busy = True
    step = len(session.history)
    store.executor.submit(_run_fit_job, session, job_id, constraints, step)
    return job_id


def create_app(workdir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    """Build the service; `workdir` stores session journals and datasets."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="knowdag session service")
    store = SessionStore(workdir, ThreadPoolExecutor(max_workers=2))
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        config = SolverConfig.from_mapping(body.get("solver", {}))
        seed = int(body.get("seed", 0))
        try:
            if "dataset_csv" in body:
                ref = "inline"
                tmp = workdir / f"upload-{uuid.uuid4().hex[:8]}.csv"
                tmp.write_text(body["dataset_csv"])
                try:
                    data = load_csv_dataset(tmp, standardize=bool(body.get("standardize", False)))
                finally:
                    tmp.unlink(missing_ok=True)
            elif "dataset_path" in body:
                ref = str(body["dataset_path"])
                data = load_csv_dataset(ref, standardize=bool(body.get("standardize", False)))
            else:
                raise ServiceError(422, "missing_dataset",
                                   "provide dataset_csv or dataset_path")
            truth = None
            if body.get("truth_path"):
                truth = read_edge_list(body["truth_path"])
            elif body.get("truth_edges") is not None:
                truth = DirectedGraph(
                    data.d, frozenset(tuple(e) for e in body["truth_edges"])
                )
            if truth is not None and truth.d != data.d:
                raise ServiceError(422, "dimension_mismatch",
                                   f"truth has d={truth.d}, dataset has d={data.d}")
        except IngestionError as exc:
            raise ServiceError(422, "bad_dataset", str(exc))
        except ParameterError as exc:
            raise ServiceError(422, "bad_parameters", str(exc))
        session = store.create(data, ref, truth, config, seed)
        with session.lock:
            job_id = _enqueue_fit(store, session, ())
        return {"id": session.id, "job_id": job_id, "n": data.n, "d": data.d}

    @app.get("/sessions/{session_id}")
    async def get_state(session_id: str):
        session = store.get(session_id)
        with session.lock:
            latest = session.history[-1] if session.history else None
            return {
                "id": session.id,
                "d": session.data.d,
                "n": session.data.n,
                "busy": session.busy,
                "steps_completed": len(session.history),
                "knowledge": constraints_to_json(session.knowledge),
                "graph": None if latest is None else latest["graph"],
                "metrics": None if latest is None else latest["metrics"],
                "has_truth": session.truth is not None,
                "jobs": {jid: dict(j) for jid, j in session.jobs.items()},
                "w_thresh": session.config.w_thresh,
            }

    @app.post("/sessions/{session_id}/constraints")
    async def submit_constraints(session_id: str, body: list[dict]):
        session = store.get(session_id)
        with session.lock:
            if not body:
                return {"knowledge": constraints_to_json(session.knowledge),
                        "job_id": None}
            if session.busy:
                raise ServiceError(409, "busy", "a fit is already running")
            try:
                new = constraints_from_json(body)
                merged = (*session.knowledge, *new)
                check_consistent(merged)
                for c in new:
                    if c.i >= session.data.d or c.j >= session.data.d:
                        raise ParameterError(
                            f"constraint ({c.i}, {c.j}) out of range for d={session.data.d}"
                        )
            except ConstraintConflictError as exc:
                raise ServiceError(409, "constraint_conflict", str(exc),
                                   detail={"pair": list(exc.pair)})
            except (ParameterError, ValueError, KeyError) as exc:
                raise ServiceError(422, "bad_constraints", str(exc))
            session.knowledge = merged
            job_id = _enqueue_fit(store, session, merged)
        return {"knowledge": constraints_to_json(session.knowledge), "job_id": job_id}

    @app.get("/sessions/{session_id}/jobs/{job_id}")
    async def get_job(session_id: str, job_id: str):
        session = store.get(session_id)
        with session.lock:
            job = session.jobs.get(job_id)
            if job is None:
                raise ServiceError(404, "unknown_job", f"no job {job_id!r}")
            return {"id": job_id, **job}

    @app.get("/sessions/{session_id}/history")
    async def get_history(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {"steps": list(session.history)}

    if static_dir is not None and Path(static_dir).exists():
        static_path = Path(static_dir)

        @app.get("/")
        async def index():
            return FileResponse(static_path / "index.html")

        app.mount("/ui", StaticFiles(directory=static_path, html=True), name="ui")

    return app
