"""FastAPI application wrapping the solver.

Error mapping: malformed documents and semantic input problems answer 400
(schema violations caught by pydantic answer 422 as usual); a method that
cannot run or fails soundness checks answers 409 so clients can tell input
errors from solver failures.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..exceptions import InputError, ReachboxError
from ..problems import SCHEMA_VERSION, ProblemDocument, build_job
from ..solver import MethodChoice, solve, solve_all
from ..validation import containment_report, sample_cloud
from .schemas import (
    BenchTrafficRequest,
    BenchTrafficResponse,
    BoxPayload,
    MethodReportPayload,
    ReachRequest,
    ReachResponse,
    ResultPayload,
    SkippedPayload,
    TimingPayload,
    ValidateRequest,
    ValidateResponse,
)


def _apply_overrides(job, overrides):
    if overrides.steps is not None:
        job.settings.steps = overrides.steps
    if overrides.seed is not None:
        job.settings.seed = overrides.seed
    if overrides.method is not None:
        job.method = overrides.method
    return job


def _run_job(job, run_all: bool):
    if run_all:
        results, skipped = solve_all(job.system, job.problem, job.settings)
    else:
        results = [solve(job.system, job.problem, job.method, job.settings)]
        skipped = []
    return results, skipped


def _reach_response(job, results, skipped) -> ReachResponse:
    return ReachResponse(
        schema_version=SCHEMA_VERSION,
        system=job.label,
        seed=job.settings.seed,
        results=[ResultPayload(
            method=r.method,
            box=BoxPayload(lower=r.over_approx.lower.tolist(),
                           upper=r.over_approx.upper.tolist()),
            trajectory_evals=r.trajectory_evals,
            notes=r.notes,
        ) for r in results],
        skipped=[SkippedPayload(method=m, reason=reason) for m, reason in skipped],
        timings=[TimingPayload(method=r.method, wall_time=r.wall_time,
                               breakdown=r.breakdown) for r in results],
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="reachbox",
        version=__version__,
        description="Interval over-approximations of reachable sets "
                    "for nonlinear systems",
    )

    @app.exception_handler(InputError)
    async def _input_error(_, exc):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.exception_handler(ReachboxError)
    async def _method_error(_, exc):
        raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/schema/problem")
    def problem_schema():
        return ProblemDocument.model_json_schema()

    @app.post("/reach", response_model=ReachResponse)
    def reach(request: ReachRequest) -> ReachResponse:
        job = _apply_overrides(build_job(request.document), request.overrides)
        run_all = request.overrides.run_all or job.method == "all"
        results, skipped = _run_job(job, run_all)
        return _reach_response(job, results, skipped)

    @app.post("/validate", response_model=ValidateResponse)
    def validate(request: ValidateRequest) -> ValidateResponse:
        job = build_job(request.document)
        results, skipped = solve_all(job.system, job.problem, job.settings)
        cloud = sample_cloud(job.system, job.problem, request.samples,
                             request.seed, job.settings.steps)
        reports = containment_report(cloud, results)
        return ValidateResponse(
            schema_version=SCHEMA_VERSION,
            system=job.label,
            seed=request.seed,
            samples=request.samples,
            reports=[MethodReportPayload(
                method=rep.method,
                containment_fraction=rep.containment_fraction,
                worst_slack=rep.worst_slack,
                width_ratio=list(rep.width_ratio),
                sound=rep.sound,
            ) for rep in reports],
            skipped=[SkippedPayload(method=m, reason=reason) for m, reason in skipped],
            all_sound=bool(reports) and all(rep.sound for rep in reports),
            cloud=cloud.T.tolist() if request.include_cloud else None,
        )

    @app.post("/bench/traffic", response_model=BenchTrafficResponse)
    def bench_traffic(request: BenchTrafficRequest) -> BenchTrafficResponse:
        document = ProblemDocument.model_validate({
            "system": {"builtin": "traffic", "params": {"n_x": request.n}},
        })
        if request.tf != 30.0:
            from ..traffic import TrafficParams, default_initial_box
            box = default_initial_box(request.n)
            prm = TrafficParams(n_x=request.n)
            document = ProblemDocument.model_validate({
                "system": {"builtin": "traffic", "params": {"n_x": request.n}},
                "problem": {
                    "t0": 0.0, "tf": request.tf,
                    "x0": {"lower": box.lower.tolist(), "upper": box.upper.tolist()},
                    "p": {"lower": [prm.inflow[0]] + [0.0] * (request.n - 1),
                          "upper": [prm.inflow[1]] + [0.0] * (request.n - 1)},
                    "input_mode": "constant",
                },
            })
        job = _apply_overrides(build_job(document), request.overrides)
        run_all = request.overrides.run_all
        if not run_all and request.overrides.method is None:
            run_all = True
        results, skipped = _run_job(job, run_all)
        return BenchTrafficResponse(document=document,
                                    reach=_reach_response(job, results, skipped))

    return app


app = create_app()
