"""HTTP facade over the advisor.

Long solves (tune, pareto) run as jobs on a small worker pool with
cooperative cancellation; routing is stateless; the monitor is a single
mutable session guarded against concurrent writers (409 on conflict).
Completed jobs persist as JSON session files under the data directory
(DIVTUNE_DATA_DIR or a temp-dir fallback) so a console can list history
across restarts.
"""
from __future__ import annotations

import json
import os
import tempfile
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import monitor as monitormod
from . import recommender
from . import routing as routingmod
from .model import (
    DivergentDesign,
    QueryStatement,
    TuningRequest,
    UpdateStatement,
    Workload,
    validate_request,
)


def _data_dir(explicit: Optional[str]) -> str:
    path = explicit or os.environ.get("DIVTUNE_DATA_DIR") or os.path.join(
        tempfile.gettempdir(), "divtune-data")
    os.makedirs(path, exist_ok=True)
    return path


@dataclass
class Job:
    job_id: str
    kind: str
    status: str = "queued"  # queued | running | done | failed | cancelled
    submitted_at: float = field(default_factory=time.time)
    finished_at: Optional[float] = None
    result: Optional[dict] = None
    error: Optional[str] = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
            "result": self.result,
            "error": self.error,
        }


class JobStore:
    def __init__(self, data_dir: str, max_workers: int = 2):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._data_dir = data_dir

    def submit(self, kind: str, fn) -> Job:
        job = Job(job_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.job_id] = job

        def run():
            with self._lock:
                if job.status == "cancelled":
                    return
                job.status = "running"
            try:
                result = fn(job.cancel_event.is_set)
                with self._lock:
                    if job.cancel_event.is_set():
                        job.status = "cancelled"
                    else:
                        job.status = "done"
                        job.result = result
            except Exception as exc:
                with self._lock:
                    job.status = ("cancelled" if job.cancel_event.is_set()
                                  else "failed")
                    job.error = str(exc)
            finally:
                job.finished_at = time.time()
                self._persist(job)

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def cancel(self, job_id: str) -> Optional[Job]:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                return None
            job.cancel_event.set()
            if job.status == "queued":
                job.status = "cancelled"
        return job

    def _persist(self, job: Job) -> None:
        path = os.path.join(self._data_dir, f"session-{job.job_id}.json")
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(job.to_dict(), fh, sort_keys=True, indent=2)
        os.replace(tmp, path)

    def sessions(self) -> list[dict]:
        out = []
        for name in sorted(os.listdir(self._data_dir)):
            if not (name.startswith("session-") and name.endswith(".json")):
                continue
            try:
                with open(os.path.join(self._data_dir, name), "r",
                          encoding="utf-8") as fh:
                    out.append(json.load(fh))
            except (OSError, json.JSONDecodeError):
                continue
        out.sort(key=lambda s: s.get("submitted_at", 0.0))
        return out

    def session(self, job_id: str) -> Optional[dict]:
        path = os.path.join(self._data_dir, f"session-{job_id}.json")
        if not os.path.exists(path):
            return None
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)


class MonitorSession:
    def __init__(self):
        self._state: Optional[monitormod.MonitorState] = None
        self._busy = threading.Lock()
        self._config_lock = threading.Lock()

    def configure(self, config: monitormod.MonitorConfig,
                  initial: Optional[DivergentDesign]) -> None:
        with self._config_lock:
            self._state = monitormod.start(config, initial)

    def observe(self, stmt) -> dict:
        if self._state is None:
            raise HTTPException(status_code=409,
                                detail="monitor is not configured")
        if not self._busy.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="another observation is in progress")
        try:
            entry = monitormod.observe(self._state, stmt)
            return entry.to_dict()
        finally:
            self._busy.release()

    def series(self) -> dict:
        if self._state is None:
            raise HTTPException(status_code=409,
                                detail="monitor is not configured")
        state = self._state
        return {
            "series": [e.to_dict() for e in state.series],
            "redeploy_count": state.redeploy_count,
            "observed": state.observed,
            "window_size": state.config.window_size,
            "improvement_threshold": state.config.improvement_threshold,
            "design": state.design.to_dict() if state.design else None,
        }


def _parse_request(doc: dict) -> TuningRequest:
    try:
        req = TuningRequest.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422,
                            detail=f"malformed request: {exc}") from exc
    problems = validate_request(req)
    if problems:
        raise HTTPException(status_code=422,
                            detail="; ".join(str(p) for p in problems))
    return req


def create_app(data_dir: Optional[str] = None,
               max_workers: int = 2) -> FastAPI:
    app = FastAPI(title="divtune", version="0.1.0")
    # the web console is served statically from another origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = JobStore(_data_dir(data_dir), max_workers=max_workers)
    monitor_session = MonitorSession()
    app.state.job_store = store
    app.state.monitor = monitor_session

    @app.post("/tune")
    def tune_endpoint(payload: dict = Body(...)) -> dict:
        req = _parse_request(payload.get("request", payload))
        sync = bool(payload.get("sync", False))
        if sync:
            try:
                return {"result": recommender.tune(req).to_dict()}
            except recommender.RecommenderError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        job = store.submit(
            "tune", lambda cancelled: recommender.tune(
                req, should_stop=cancelled).to_dict())
        return {"job_id": job.job_id, "status": job.status}

    @app.post("/pareto")
    def pareto_endpoint(payload: dict = Body(...)) -> dict:
        try:
            workload = Workload.from_dict(payload["workload"])
            replica_counts = [int(v) for v in payload["replica_counts"]]
            multiplicity = int(payload.get("multiplicity", 1))
            space_budget = payload.get("space_budget")
            fractions = tuple(payload.get("fractions",
                                          recommender.DEFAULT_FRACTIONS))
            current = None
            if payload.get("current"):
                current = {int(k): DivergentDesign.from_dict(v)
                           for k, v in payload["current"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422,
                                detail=f"malformed request: {exc}") from exc

        def run(cancelled):
            points = recommender.pareto(
                workload, replica_counts, multiplicity=multiplicity,
                space_budget=space_budget, current=current,
                fractions=fractions, should_stop=cancelled)
            return {"points": [p.to_dict() for p in points]}

        sync = bool(payload.get("sync", False))
        if sync:
            try:
                return {"result": run(lambda: False)}
            except recommender.RecommenderError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        job = store.submit("pareto", run)
        return {"job_id": job.job_id, "status": job.status}

    @app.get("/jobs/{job_id}")
    def job_endpoint(job_id: str) -> dict:
        job = store.get(job_id)
        if job is None:
            session = store.session(job_id)
            if session is None:
                raise HTTPException(status_code=404, detail="no such job")
            return session
        return job.to_dict()

    @app.post("/jobs/{job_id}/cancel")
    def cancel_endpoint(job_id: str) -> dict:
        job = store.cancel(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="no such job")
        return job.to_dict()

    @app.post("/route")
    def route_endpoint(payload: dict = Body(...)) -> dict:
        try:
            workload = Workload.from_dict(payload["workload"])
            design = DivergentDesign.from_dict(payload["design"])
            multiplicity = int(payload.get("multiplicity", 1))
            if "query" in payload:
                query = QueryStatement.from_dict(payload["query"])
            else:
                query = workload.query_by_id(str(payload["query_id"]))
                if query is None:
                    raise HTTPException(status_code=404,
                                        detail="query not in workload")
            use_similarity = bool(payload.get("similarity", True))
        except HTTPException:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422,
                                detail=f"malformed request: {exc}") from exc
        from . import costmodel
        known = design.routing.normal_map().get(query.id, ())
        if known:
            replicas, method = known, "designed"
        elif use_similarity:
            replicas = routingmod.route_by_similarity(
                query, design, workload, multiplicity)
            method = "similarity"
        else:
            replicas = routingmod.route_top_m(query, design, multiplicity)
            method = "top_m"
        return {
            "query": query.id,
            "replicas": list(replicas),
            "method": method,
            "costs": {str(r): costmodel.query_cost(query, design.config(r))
                      for r in range(1, design.replica_count + 1)},
        }

    @app.post("/monitor/configure")
    def monitor_configure(payload: dict = Body(...)) -> dict:
        try:
            config = monitormod.MonitorConfig.from_dict(payload["config"])
            initial = (DivergentDesign.from_dict(payload["initial_design"])
                       if payload.get("initial_design") else None)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422,
                                detail=f"malformed request: {exc}") from exc
        try:
            monitor_session.configure(config, initial)
        except monitormod.MonitorError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"configured": True, "window_size": config.window_size}

    @app.post("/monitor/observe")
    def monitor_observe(payload: dict = Body(...)) -> dict:
        try:
            if payload.get("kind") == "update":
                stmt = UpdateStatement.from_dict(payload["statement"])
            else:
                stmt = QueryStatement.from_dict(payload["statement"])
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422,
                                detail=f"malformed request: {exc}") from exc
        return monitor_session.observe(stmt)

    @app.get("/monitor/series")
    def monitor_series() -> dict:
        return monitor_session.series()

    @app.get("/sessions")
    def sessions_endpoint() -> dict:
        return {"sessions": store.sessions()}

    @app.get("/sessions/{job_id}")
    def session_endpoint(job_id: str) -> dict:
        session = store.session(job_id)
        if session is None:
            raise HTTPException(status_code=404, detail="no such session")
        return session

    return app
