"""HTTP facade for the companion UI: datasets, fit jobs, simulation, ranking.

Fits run as asynchronous jobs on a single worker thread behind a bounded
FIFO queue (depth 8 by default); simulate/rank/compress are synchronous.
All artifacts live in a content-addressed file store, so identical inputs
yield identical ids and any posterior equals the CLI's output byte for
byte given the same seed.

Status codes: 400 malformed request, 404 unknown id, 409 hash/provenance
mismatch, 422 validation failure, 503 job queue full.
"""

from __future__ import annotations

import queue
import threading
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .diagnostics import compute_diagnostics
from .errors import ConvergenceError, DataFormatError, HashMismatchError, PriorCoverageError
from .inference import SamplerConfig, posterior_from_dict, posterior_to_json
from .model import default_graph, default_instrument, graph_to_dict, instrument_to_dict
from .priors import compress_posterior, prior_from_dict, prior_to_json
from .store import ArtifactStore
from .survey import dataset_from_dict, dataset_to_json, parse_responses, score_constructs
from .whatif import rank as rank_scenarios, scenario_from_dict, simulate
from .workflow import fit_posterior

DEFAULT_QUEUE_DEPTH = 8


class JobRunner:
    """Serialized fit execution: bounded FIFO queue, one worker thread."""

    def __init__(self, store: ArtifactStore, depth: int = DEFAULT_QUEUE_DEPTH):
        self.store = store
        self.queue: queue.Queue = queue.Queue(maxsize=depth)
        self.jobs: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._stop = object()
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, name="fit-worker", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is not None:
            self.queue.put(self._stop)
            self._thread.join(timeout=30)
            self._thread = None

    def submit(self, spec: dict) -> str:
        job_id = uuid.uuid4().hex
        record = {
            "v": 1,
            "jobId": job_id,
            "kind": "fit",
            "status": "queued",
            "submitted": _now(),
            "finished": None,
            "posteriorId": None,
            "error": None,
        }
        with self._lock:
            self.jobs[job_id] = record
        try:
            self.queue.put_nowait((job_id, spec))
        except queue.Full:
            with self._lock:
                del self.jobs[job_id]
            raise
        return job_id

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            record = self.jobs.get(job_id)
            return dict(record) if record else None

    def _update(self, job_id: str, **fields) -> None:
        with self._lock:
            self.jobs[job_id].update(fields)

    def _loop(self) -> None:
        while True:
            item = self.queue.get()
            if item is self._stop:
                return
            job_id, spec = item
            self._update(job_id, status="running")
            try:
                posterior_id = run_fit_job(self.store, spec)
                self._update(job_id, status="done", finished=_now(), posteriorId=posterior_id)
            except Exception as exc:  # job errors surface via GET /jobs/{id}
                self._update(job_id, status="failed", finished=_now(), error=str(exc))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_fit_job(store: ArtifactStore, spec: dict) -> str:
    """Execute one fit: load dataset (and optional prior), sample, store."""
    dataset_art = store.get(spec["datasetId"], kind="dataset")
    if dataset_art is None:
        raise DataFormatError(f"dataset {spec['datasetId']} not found")
    data = dataset_from_dict(dataset_art.payload)
    prior = None
    if spec.get("priorId"):
        prior_art = store.get(spec["priorId"], kind="prior")
        if prior_art is None:
            raise DataFormatError(f"prior {spec['priorId']} not found")
        prior = prior_from_dict(prior_art.payload)
    cfg_doc = spec.get("samplerConfig") or {}
    cfg = SamplerConfig(
        chains=int(cfg_doc.get("chains", 4)),
        warmup_draws=int(cfg_doc.get("warmup", 1000)),
        kept_draws=int(cfg_doc.get("draws", 1000)),
        seed=int(cfg_doc.get("seed", 0)),
    )
    samples, _diag = fit_posterior(data, prior, cfg, default_graph())
    payload = posterior_to_json(samples)
    return store.put(
        "posterior",
        payload,
        provenance={"datasetId": spec["datasetId"], "priorId": spec.get("priorId") or ""},
    )


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"v": 1, "error": detail})


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise _BadRequest("request body is not valid JSON")
    if not isinstance(body, dict):
        raise _BadRequest("request body must be a JSON object")
    return body


class _BadRequest(Exception):
    def __init__(self, detail: str):
        self.detail = detail


def create_app(data_dir: Path | str, queue_depth: int = DEFAULT_QUEUE_DEPTH) -> FastAPI:
    store = ArtifactStore(Path(data_dir))
    runner = JobRunner(store, depth=queue_depth)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        runner.start()
        yield
        runner.stop()

    app = FastAPI(title="uptake service", version="1", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.runner = runner

    @app.exception_handler(_BadRequest)
    async def bad_request_handler(request: Request, exc: _BadRequest):
        return _error(400, exc.detail)

    @app.exception_handler(DataFormatError)
    async def data_error_handler(request: Request, exc: DataFormatError):
        return _error(422, str(exc))

    @app.exception_handler(PriorCoverageError)
    async def prior_error_handler(request: Request, exc: PriorCoverageError):
        return _error(422, str(exc))

    @app.exception_handler(HashMismatchError)
    async def hash_error_handler(request: Request, exc: HashMismatchError):
        return _error(409, str(exc))

    @app.exception_handler(ConvergenceError)
    async def convergence_error_handler(request: Request, exc: ConvergenceError):
        return _error(422, str(exc))

    @app.get("/model/graph")
    def model_graph():
        graph = default_graph()
        doc = {"v": 1}
        doc.update(instrument_to_dict(default_instrument()))
        doc.update(graph_to_dict(graph))
        return doc

    @app.post("/datasets")
    async def upload_dataset(request: Request):
        body = await _json_body(request)
        content = body.get("content")
        if not isinstance(content, str):
            raise _BadRequest("field 'content' (string) is required")
        fmt = body.get("format", "csv")
        policy = body.get("policy", "per-construct-item-mean")
        responses = parse_responses(content, fmt, default_instrument())
        data = score_constructs(responses, default_instrument(), policy=policy)
        payload = dataset_to_json(data)
        dataset_id = store.put("dataset", payload)
        return {
            "v": 1,
            "datasetId": dataset_id,
            "respondents": data.n,
            "instrumentHash": data.instrument_id,
            "warnings": data.provenance.get("warnings", []),
        }

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        raw = store.get_bytes(dataset_id, kind="dataset")
        if raw is None:
            return _error(404, f"dataset {dataset_id} not found")
        return Response(content=raw, media_type="application/json")

    @app.post("/jobs/fit")
    async def submit_fit(request: Request):
        body = await _json_body(request)
        dataset_id = body.get("datasetId")
        if not isinstance(dataset_id, str):
            raise _BadRequest("field 'datasetId' (string) is required")
        dataset_art = store.get(dataset_id, kind="dataset")
        if dataset_art is None:
            return _error(404, f"dataset {dataset_id} not found")
        prior_id = body.get("priorId")
        if prior_id:
            prior_art = store.get(prior_id, kind="prior")
            if prior_art is None:
                return _error(404, f"prior {prior_id} not found")
            # chained priors must match the current graph and instrument
            prior = prior_from_dict(prior_art.payload)
            data = dataset_from_dict(dataset_art.payload)
            from .workflow import check_prior_compatibility

            check_prior_compatibility(prior, default_graph(), data)
        spec = {
            "datasetId": dataset_id,
            "priorId": prior_id,
            "samplerConfig": body.get("samplerConfig") or {},
        }
        try:
            job_id = runner.submit(spec)
        except queue.Full:
            return _error(503, "fit queue is full; retry later")
        return {"v": 1, "jobId": job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        record = runner.get(job_id)
        if record is None:
            return _error(404, f"job {job_id} not found")
        return record

    @app.get("/posteriors/{posterior_id}")
    def get_posterior(posterior_id: str):
        raw = store.get_bytes(posterior_id, kind="posterior")
        if raw is None:
            return _error(404, f"posterior {posterior_id} not found")
        return Response(content=raw, media_type="application/json")

    def _load_posterior_with_data(posterior_id: str):
        art = store.get(posterior_id, kind="posterior")
        if art is None:
            return None, None, _error(404, f"posterior {posterior_id} not found")
        samples = posterior_from_dict(art.payload)
        dataset_id = art.provenance.get("datasetId") or samples.dataset_hash
        dataset_art = store.get(dataset_id, kind="dataset")
        if dataset_art is None:
            return None, None, _error(409, f"dataset {dataset_id} for posterior is missing from the store")
        data = dataset_from_dict(dataset_art.payload)
        return samples, data, None

    @app.get("/posteriors/{posterior_id}/summary")
    def posterior_summary(posterior_id: str):
        samples, data, err = _load_posterior_with_data(posterior_id)
        if err is not None:
            return err
        diag = compute_diagnostics(samples)
        pooled = samples.pooled()
        graph = default_graph()
        params = []
        by_name = {}
        for i, name in enumerate(samples.names):
            col = pooled[:, i]
            lo, hi = np.quantile(col, [0.05, 0.95])
            entry = {
                "name": name,
                "mean": float(col.mean()),
                "sd": float(col.std(ddof=1)),
                "ci90": [float(lo), float(hi)],
                "rhat": None if np.isnan(diag.rhat[name]) else float(diag.rhat[name]),
                "ess": None if np.isnan(diag.ess[name]) else float(diag.ess[name]),
            }
            params.append(entry)
            by_name[name] = entry
        edges = []
        for e in graph.edges:
            coef = by_name.get(f"beta[{e.source}->{e.target}]")
            if coef is not None:
                edges.append(
                    {
                        "from": e.source,
                        "to": e.target,
                        "theory": e.source_theory,
                        "coef": {"mean": coef["mean"], "ci90": coef["ci90"]},
                    }
                )
        return {
            "v": 1,
            "posteriorId": posterior_id,
            "parameters": params,
            "edges": edges,
            "constructMeans": {c: data.stats[c].mean for c in data.constructs},
            "scale": {"min": data.scale_min, "max": data.scale_max},
            "diagnostics": samples.diagnostics_summary or diag.to_summary(),
            "respondents": data.n,
        }

    @app.post("/simulate")
    async def simulate_endpoint(request: Request):
        body = await _json_body(request)
        posterior_id = body.get("posteriorId")
        if not isinstance(posterior_id, str):
            raise _BadRequest("field 'posteriorId' (string) is required")
        if "scenario" not in body or not isinstance(body["scenario"], dict):
            raise _BadRequest("field 'scenario' (object) is required")
        samples, data, err = _load_posterior_with_data(posterior_id)
        if err is not None:
            return err
        scenario = scenario_from_dict(body["scenario"])
        draws = int(body.get("draws", 1))
        seed = int(body.get("seed", 0))
        result = simulate(samples, data, scenario, draws, seed, default_graph())
        return {
            "v": 1,
            "scenario": scenario.name,
            "targets": {k: v.to_dict() for k, v in sorted(result.items())},
        }

    @app.post("/rank")
    async def rank_endpoint(request: Request):
        body = await _json_body(request)
        posterior_id = body.get("posteriorId")
        if not isinstance(posterior_id, str):
            raise _BadRequest("field 'posteriorId' (string) is required")
        scenarios_doc = body.get("scenarios")
        if not isinstance(scenarios_doc, list) or not scenarios_doc:
            raise _BadRequest("field 'scenarios' (non-empty list) is required")
        samples, data, err = _load_posterior_with_data(posterior_id)
        if err is not None:
            return err
        scenarios = [scenario_from_dict(doc) for doc in scenarios_doc]
        draws = int(body.get("draws", 1))
        seed = int(body.get("seed", 0))
        result = rank_scenarios(samples, data, scenarios, draws, seed, default_graph())
        doc = result.to_dict()
        doc["posteriorId"] = posterior_id
        return doc

    @app.post("/posteriors/{posterior_id}/compress")
    def compress_endpoint(posterior_id: str):
        art = store.get(posterior_id, kind="posterior")
        if art is None:
            return _error(404, f"posterior {posterior_id} not found")
        samples = posterior_from_dict(art.payload)
        prior = compress_posterior(samples, source_id=posterior_id)
        prior_id = store.put("prior", prior_to_json(prior), provenance={"posteriorId": posterior_id})
        return {"v": 1, "priorId": prior_id}

    @app.get("/priors/{prior_id}")
    def get_prior(prior_id: str):
        raw = store.get_bytes(prior_id, kind="prior")
        if raw is None:
            return _error(404, f"prior {prior_id} not found")
        return Response(content=raw, media_type="application/json")

    return app
