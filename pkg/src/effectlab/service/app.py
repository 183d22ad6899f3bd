"""Versioned HTTP+JSON API for what-if queries, ranking, and probes.

Every response is a pure function of the stored datasets and the request
body, so repeated calls are idempotent. Domain failures map to
structured JSON errors: 404 for unknown ids, 400 for malformed input,
422 for requests that are well-formed but statistically or semantically
invalid (single-arm treatment, target among candidates, and so on).
"""
from __future__ import annotations

from typing import Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .. import __version__
from ..baseline import SLearner
from ..errors import (
    CapacityError,
    ConfigurationError,
    ContractError,
    DegenerateTreatmentError,
    EffectLabError,
    InvalidInterventionError,
    NotFittedError,
    PositivityError,
)
from ..episodes import narrow_linear_prior
from ..model.checkpoint import load_checkpoint, save_checkpoint
from ..model.config import ModelConfig, TrainConfig
from ..model.inference import predict_cate
from ..model.network import init_params
from ..model.train import train
from ..rng import derived_rng, ensure_rng
from ..table import (
    CATEGORICAL,
    ROLE_OUTCOME,
    ROLE_TREATMENT,
    Column,
    SampleTable,
)
from .jobs import JobNotFound, JobRunner
from .store import DatasetNotFound, DatasetStore


class RangeSpec(BaseModel):
    start: int = Field(ge=0)
    stop: int = Field(ge=0)


class QuerySpec(BaseModel):
    rows: list[dict[str, float]] | None = None
    row_range: RangeSpec | None = None


class EstimateRequest(BaseModel):
    dataset_id: str
    treatment_column: str
    outcome_column: str
    t1: float = 1.0
    t0: float = 0.0
    estimator: Literal["s-learner", "in-context"] = "s-learner"
    bootstrap: bool = False
    query: QuerySpec | None = None


class RankCandidate(BaseModel):
    column: str
    t1: float | None = None
    t0: float | None = None


class RankRequest(BaseModel):
    dataset_id: str
    outcome_column: str
    candidates: list[RankCandidate] = Field(min_length=1)
    objective: Literal["maximize", "minimize"] = "maximize"
    estimator: Literal["s-learner", "in-context"] = "s-learner"
    bootstrap: bool = False
    query: QuerySpec | None = None


class RootCauseRequest(BaseModel):
    dataset_id: str
    target_column: str
    candidates: list[str] = Field(min_length=1)
    probe_values: dict[str, float] | None = None
    estimator: Literal["s-learner", "in-context"] = "s-learner"


class ColumnPatch(BaseModel):
    kinds: dict[str, Literal["continuous", "categorical"]] | None = None
    roles: dict[str, Literal["covariate", "treatment", "outcome"]] | None = None


class TrainJobRequest(BaseModel):
    steps: int = Field(default=50, ge=0)
    batch_size: int = Field(default=4, ge=1)
    seed: int = 0
    learning_rate: float | None = Field(default=None, gt=0)
    checkpoint_name: str | None = None


def _error_body(exc: Exception, error_type: str) -> dict:
    return {"error": {"type": error_type, "message": str(exc)}}


def _require_column(table: SampleTable, name: str) -> None:
    if name not in table.column_names:
        raise ContractError(f"unknown column {name!r}")


def _query_table(table: SampleTable, covariate_names: list[str],
                 query: QuerySpec | None) -> SampleTable:
    """Resolve the query rows: explicit dicts, a row range, or every row."""
    base = table.select(covariate_names)
    if query is None or (query.rows is None and query.row_range is None):
        return base
    if query.rows is not None and query.row_range is not None:
        raise ContractError("pass either query rows or a row range, not both")
    if query.row_range is not None:
        r = query.row_range
        if r.stop <= r.start or r.start >= table.n_rows:
            raise ContractError(f"empty query row range [{r.start}, {r.stop})")
        idx = np.arange(r.start, min(r.stop, table.n_rows))
        return base.take_rows(idx)
    rows = []
    for i, row in enumerate(query.rows):
        unknown = set(row) - set(covariate_names)
        if unknown:
            raise ContractError(f"query row {i}: unknown columns {sorted(unknown)}")
        missing = [n for n in covariate_names if n not in row]
        if missing:
            raise ContractError(f"query row {i}: missing columns {missing}")
        rows.append([float(row[n]) for n in covariate_names])
    if not rows:
        raise ContractError("query rows list is empty")
    return SampleTable(list(base.columns), np.asarray(rows, dtype=np.float64))


def _binarized_flag(values: np.ndarray, kind: str, t1: float, t0: float) -> np.ndarray:
    """Collapse a treatment column to a 0/1 flag for the in-context model."""
    if kind == CATEGORICAL:
        return (values == t1).astype(np.float64)
    midpoint = 0.5 * (t1 + t0)
    return (values >= midpoint).astype(np.float64)


def create_app(store_dir, checkpoint_path=None) -> FastAPI:
    """Build the service around a store directory.

    ``checkpoint_path`` preloads a trained in-context model; without it
    the ``in-context`` estimator id is rejected until a training job has
    produced one.
    """
    app = FastAPI(title="effectlab", version=__version__)
    # The browser companion is served as static files from a different
    # origin; the API is a local single-user tool, so reflect any origin.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = DatasetStore(store_dir)
    jobs = JobRunner()
    app.state.store = store
    app.state.jobs = jobs
    app.state.model = None
    if checkpoint_path is not None:
        params, config, _ = load_checkpoint(checkpoint_path)
        app.state.model = (params, config)

    # ---- error mapping ---------------------------------------------------

    @app.exception_handler(DatasetNotFound)
    @app.exception_handler(JobNotFound)
    async def _not_found(request: Request, exc: EffectLabError):
        return JSONResponse(status_code=404, content=_error_body(exc, "not_found"))

    @app.exception_handler(ContractError)
    async def _contract(request: Request, exc: ContractError):
        # CSV parse errors carry row/column locations and are client input
        # errors; other contract breaches are semantic validation failures.
        if request.method == "POST" and request.url.path.endswith("/datasets"):
            return JSONResponse(status_code=400, content=_error_body(exc, "parse_error"))
        return JSONResponse(status_code=422, content=_error_body(exc, "validation_error"))

    @app.exception_handler(ConfigurationError)
    async def _config(request: Request, exc: ConfigurationError):
        return JSONResponse(status_code=400, content=_error_body(exc, "configuration_error"))

    @app.exception_handler(RequestValidationError)
    async def _request_shape(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        if errors:
            first = errors[0]
            loc = ".".join(
                p for p in first.get("loc", ()) if isinstance(p, str) and p != "body"
            )
            msg = first.get("msg", "invalid request body")
            message = f"{loc}: {msg}" if loc else msg
        else:
            message = "invalid request body"
        return JSONResponse(
            status_code=422,
            content={"error": {"type": "validation_error", "message": message}},
        )

    for _cls, _type in (
        (PositivityError, "positivity_error"),
        (DegenerateTreatmentError, "degenerate_treatment"),
        (InvalidInterventionError, "invalid_intervention"),
        (CapacityError, "capacity_error"),
        (NotFittedError, "not_fitted"),
    ):
        def _make(_type=_type):
            async def handler(request: Request, exc: EffectLabError):
                return JSONResponse(status_code=422, content=_error_body(exc, _type))
            return handler
        app.exception_handler(_cls)(_make())

    # ---- estimation core -------------------------------------------------

    def _estimate_points(table: SampleTable, treatment: str, outcome: str,
                         t1: float, t0: float, estimator: str,
                         queries: SampleTable, bootstrap: bool):
        """Per-query effect estimates; returns (point, lower, upper) arrays."""
        _require_column(table, treatment)
        _require_column(table, outcome)
        if treatment == outcome:
            raise ContractError("treatment and outcome must differ")
        if t1 == t0:
            raise ContractError("contrast values t1 and t0 must differ")
        # The request's column choice wins over any stored role tags.
        table = SampleTable(
            [Column(c.name, c.kind, c.categories) for c in table.columns],
            table.data,
        )
        cov_names = [n for n in table.column_names if n not in (treatment, outcome)]
        if not cov_names:
            raise ContractError("no covariate columns left beside treatment and outcome")
        if estimator == "in-context":
            if app.state.model is None:
                raise ConfigurationError(
                    "no model checkpoint configured; train one or serve with a checkpoint"
                )
            params, config = app.state.model
            t_col = table.column(treatment)
            flag = _binarized_flag(table.values(treatment), t_col.kind, t1, t0)
            columns = [
                Column(c.name, c.kind, c.categories)
                for c in table.columns if c.name in cov_names
            ]
            columns.append(Column(treatment, CATEGORICAL, 2, role=ROLE_TREATMENT))
            columns.append(Column(outcome, role=ROLE_OUTCOME))
            context = SampleTable(
                columns,
                np.column_stack([
                    table.select(cov_names).data, flag, table.values(outcome),
                ]),
            )
            est = predict_cate(params, config, context, queries,
                               n_bootstrap=20 if bootstrap else 0,
                               truncate=True)
            return est.point, est.lower, est.upper
        learner = SLearner(seed=0)
        learner.fit(table.with_roles(**{treatment: ROLE_TREATMENT, outcome: ROLE_OUTCOME}))
        point = learner.estimate_cate(queries, t1=t1, t0=t0).point
        if not bootstrap:
            return point, None, None
        rng = ensure_rng(0)
        draws = np.empty((20, point.shape[0]))
        n = table.n_rows
        for b in range(20):
            idx = rng.integers(0, n, size=n)
            sub = table.take_rows(idx).with_roles(
                **{treatment: ROLE_TREATMENT, outcome: ROLE_OUTCOME}
            )
            boot = SLearner(seed=0)
            boot.fit(sub)
            draws[b] = boot.estimate_cate(queries, t1=t1, t0=t0).point
        return point, np.percentile(draws, 10, axis=0), np.percentile(draws, 90, axis=0)

    # ---- dataset endpoints -----------------------------------------------

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/datasets", status_code=201)
    async def upload_dataset(request: Request):
        raw = await request.body()
        if not raw:
            raise ContractError("empty upload: expected CSV bytes")
        record = store.put_csv(raw)
        return record.describe()

    @app.get("/v1/datasets")
    async def list_datasets():
        return {"datasets": [store.get(i).describe() for i in store.list_ids()]}

    @app.get("/v1/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str):
        return store.get(dataset_id).describe()

    @app.get("/v1/datasets/{dataset_id}/rows")
    async def get_rows(dataset_id: str, limit: int = 50, offset: int = 0):
        record = store.get(dataset_id)
        table = record.table
        limit = max(0, limit)
        offset = max(0, offset)
        rows = table.data[offset: offset + limit]
        return {
            "columns": list(table.column_names),
            "offset": offset,
            "total_rows": table.n_rows,
            "rows": [[float(v) for v in row] for row in rows],
        }

    @app.get("/v1/datasets/{dataset_id}/download")
    async def download_dataset(dataset_id: str):
        return PlainTextResponse(
            store.get(dataset_id).table.to_csv(), media_type="text/csv"
        )

    @app.patch("/v1/datasets/{dataset_id}/columns")
    async def patch_columns(dataset_id: str, patch: ColumnPatch):
        record = store.set_columns(dataset_id, kinds=patch.kinds, roles=patch.roles)
        return record.describe()

    # ---- effect endpoints ------------------------------------------------

    @app.post("/v1/estimate")
    async def estimate(req: EstimateRequest):
        record = store.get(req.dataset_id)
        table = record.table
        _require_column(table, req.treatment_column)
        _require_column(table, req.outcome_column)
        cov_names = [
            n for n in table.column_names
            if n not in (req.treatment_column, req.outcome_column)
        ]
        queries = _query_table(table, cov_names, req.query)
        point, lower, upper = _estimate_points(
            table, req.treatment_column, req.outcome_column,
            req.t1, req.t0, req.estimator, queries, req.bootstrap,
        )
        estimates = []
        for i in range(point.shape[0]):
            estimates.append({
                "point": float(point[i]),
                "lower": None if lower is None else float(lower[i]),
                "upper": None if upper is None else float(upper[i]),
            })
        return {"query": req.model_dump(), "estimates": estimates}

    @app.post("/v1/rank")
    async def rank_interventions(req: RankRequest):
        record = store.get(req.dataset_id)
        table = record.table
        _require_column(table, req.outcome_column)
        scored, flagged = [], []
        for cand in req.candidates:
            _require_column(table, cand.column)
            if cand.column == req.outcome_column:
                raise ContractError(
                    f"candidate {cand.column!r} is the outcome column"
                )
            col = table.column(cand.column)
            values = table.values(cand.column)
            t1, t0 = _default_contrast(col.kind, values, cand.t1, cand.t0)
            cov_names = [
                n for n in table.column_names
                if n not in (cand.column, req.outcome_column)
            ]
            entry = {"candidate": cand.column, "t1": t1, "t0": t0,
                     "estimate": None, "lower": None, "upper": None,
                     "flagged": False, "reason": None}
            try:
                queries = _query_table(table, cov_names, req.query)
                point, lower, upper = _estimate_points(
                    table, cand.column, req.outcome_column, t1, t0,
                    req.estimator, queries, req.bootstrap,
                )
                entry["estimate"] = float(np.mean(point))
                if lower is not None:
                    entry["lower"] = float(np.mean(lower))
                    entry["upper"] = float(np.mean(upper))
                scored.append(entry)
            except (PositivityError, DegenerateTreatmentError, ContractError) as exc:
                entry["flagged"] = True
                entry["reason"] = str(exc)
                flagged.append(entry)
        sign = -1.0 if req.objective == "maximize" else 1.0
        scored.sort(key=lambda e: (sign * e["estimate"], e["candidate"]))
        flagged.sort(key=lambda e: e["candidate"])
        return {
            "objective": req.objective,
            "estimator": req.estimator,
            "ranking": scored + flagged,
        }

    @app.post("/v1/root-cause")
    async def root_cause(req: RootCauseRequest):
        record = store.get(req.dataset_id)
        table = record.table
        _require_column(table, req.target_column)
        if req.target_column in req.candidates:
            raise ContractError("target column cannot be among the candidates")
        if len(set(req.candidates)) != len(req.candidates):
            raise ContractError("duplicate candidate columns")
        probes = req.probe_values or {}
        unknown_probe = set(probes) - set(req.candidates)
        if unknown_probe:
            raise ContractError(
                f"probe values for non-candidate columns {sorted(unknown_probe)}"
            )
        results = []
        for name in req.candidates:
            _require_column(table, name)
            col = table.column(name)
            values = table.values(name)
            entry = {"candidate": name, "probe_value": None, "effect": None,
                     "abs_effect": None, "untestable": False, "reason": None}
            if np.unique(values).size < 2:
                entry["untestable"] = True
                entry["reason"] = "constant column"
                results.append(entry)
                continue
            if name in probes:
                probe = float(probes[name])
            elif col.kind == CATEGORICAL:
                classes, counts = np.unique(values, return_counts=True)
                probe = float(classes[np.argmax(counts)])
            else:
                probe = float(np.median(values))
            entry["probe_value"] = probe
            # The probe contrast is binary: rows at the probe value (at or
            # above it, for continuous columns) against the rest.
            if col.kind == CATEGORICAL:
                flag = (values == probe).astype(np.float64)
            else:
                flag = (values >= probe).astype(np.float64)
            if np.unique(flag).size < 2:
                entry["untestable"] = True
                entry["reason"] = "probe contrast has a single arm"
                results.append(entry)
                continue
            probed = SampleTable(
                [Column(c.name, c.kind, c.categories) for c in table.columns
                 if c.name != name]
                + [Column(name, CATEGORICAL, 2)],
                np.column_stack([
                    table.select([n for n in table.column_names if n != name]).data,
                    flag,
                ]),
            )
            cov_names = [
                n for n in probed.column_names
                if n not in (name, req.target_column)
            ]
            try:
                queries = _query_table(probed, cov_names, None)
                point, _, _ = _estimate_points(
                    probed, name, req.target_column, 1.0, 0.0,
                    req.estimator, queries, False,
                )
                entry["effect"] = float(np.mean(point))
                entry["abs_effect"] = abs(entry["effect"])
            except (PositivityError, DegenerateTreatmentError) as exc:
                entry["untestable"] = True
                entry["reason"] = str(exc)
            results.append(entry)
        testable = [e for e in results if not e["untestable"]]
        untestable = [e for e in results if e["untestable"]]
        testable.sort(key=lambda e: (-e["abs_effect"], e["candidate"]))
        untestable.sort(key=lambda e: e["candidate"])
        return {"target": req.target_column, "results": testable + untestable}

    # ---- jobs ------------------------------------------------------------

    @app.post("/v1/jobs/train", status_code=202)
    async def submit_train(req: TrainJobRequest):
        name = req.checkpoint_name or f"train-{req.seed}-{req.steps}.ckpt"
        path = store.checkpoint_path(name)

        def run():
            prior = narrow_linear_prior()
            kwargs = dict(steps=max(req.steps, 1), batch_size=req.batch_size,
                          seed=req.seed)
            if req.learning_rate is not None:
                kwargs["learning_rate"] = req.learning_rate
            tc = TrainConfig(**kwargs)
            mc = ModelConfig()
            if req.steps == 0:
                params = init_params(mc, derived_rng(req.seed, 0))
                save_checkpoint(path, params, mc, extras={"step": 0, "lr": tc.learning_rate})
                final_loss = None
            else:
                result = train(mc, tc, prior=prior, checkpoint_path=path)
                final_loss = float(result.smoothed[-1])
            params, config, _ = load_checkpoint(path)
            app.state.model = (params, config)
            return {"checkpoint": name, "final_smoothed_loss": final_loss}

        job = jobs.submit("train", run)
        return job.describe()

    @app.get("/v1/jobs")
    async def list_jobs():
        return {"jobs": [j.describe() for j in jobs.list_jobs()]}

    @app.get("/v1/jobs/{job_id}")
    async def get_job(job_id: str):
        return jobs.get(job_id).describe()

    return app


def _default_contrast(kind: str, values: np.ndarray,
                      t1: float | None, t0: float | None) -> tuple[float, float]:
    """Fill missing contrast ends from the observed column distribution."""
    if t1 is not None and t0 is not None:
        return float(t1), float(t0)
    if kind == CATEGORICAL:
        classes = np.unique(values)
        lo = float(classes.min())
        hi = float(classes.max())
    else:
        lo = float(np.quantile(values, 0.25))
        hi = float(np.quantile(values, 0.75))
    return (float(t1) if t1 is not None else hi,
            float(t0) if t0 is not None else lo)
