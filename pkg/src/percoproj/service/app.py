"""FastAPI service wrapping the core package.

Endpoints mirror the CLI subcommands one-to-one: /generate, /density,
/constants, /verify, /experiment.  Domain errors map to HTTP 400 with the
message in `detail`; experiment gate failures are successful computations
and stay HTTP 200 with the outcome in the body.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..bounds import constants_report
from ..density import PiecewiseDensity, density_for
from ..errors import PercoprojError
from ..experiments import ExperimentConfig, run_suite
from ..geometry import Direction
from ..oracles import verify_realization
from ..params import PercolationParams
from ..percolation import (
    PercolationTree,
    feasibility_estimate,
    generate,
    parse_tree,
    serialize_tree,
    z_estimate,
)
from .schemas import (
    ConstantsRequest,
    ConstantsResponse,
    DensityRequest,
    DensityResponse,
    ExperimentRequest,
    ExperimentResponse,
    GenerateRequest,
    GenerateResponse,
    RegimeInfo,
    VerifyRequest,
    VerifyResponse,
)


def _regime_info(params: PercolationParams) -> RegimeInfo:
    warnings = []
    if not params.supercritical_branching:
        warnings.append(
            f"k^2 p = {params.branching_mean:.6g} <= 1: realization dies out almost surely"
        )
    if not params.projection_regime:
        warnings.append(
            f"kp = {params.k * params.p:.6g} <= 1: projection statements do not apply"
        )
    return RegimeInfo(
        branching_mean=params.branching_mean,
        supercritical_branching=params.supercritical_branching,
        projection_regime=params.projection_regime,
        warnings=warnings,
    )


def _generate_tree(req: GenerateRequest) -> PercolationTree:
    params = PercolationParams(k=req.k, p=req.p)
    return generate(params, req.seed, req.depth, req.cell_budget)


def _resolve_tree(tree_text: str | None, gen: GenerateRequest | None) -> PercolationTree:
    if (tree_text is None) == (gen is None):
        raise HTTPException(400, "provide exactly one of tree_text / generate")
    if tree_text is not None:
        return parse_tree(tree_text)
    return _generate_tree(gen)


def create_app() -> FastAPI:
    app = FastAPI(
        title="percoproj",
        description="Fractal-percolation simulation and projected-density verification service",
    )

    @app.exception_handler(PercoprojError)
    async def _domain_error(request, exc):  # noqa: ANN001
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):  # noqa: ANN001
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/generate", response_model=GenerateResponse)
    def generate_endpoint(req: GenerateRequest) -> GenerateResponse:
        tree = _generate_tree(req)
        counts = tree.counts()
        extinct_at = next((m for m, c in enumerate(counts) if c == 0), None)
        return GenerateResponse(
            k=req.k,
            p=req.p,
            seed=req.seed,
            max_depth=req.depth,
            counts=counts,
            z_estimates=[z_estimate(tree, m) for m in range(req.depth + 1)],
            extinct_at=extinct_at,
            regime=_regime_info(tree.params),
            tree_text=serialize_tree(tree),
        )

    @app.post("/density", response_model=DensityResponse)
    def density_endpoint(req: DensityRequest) -> DensityResponse:
        tree = _resolve_tree(req.tree_text, req.generate)
        direction = Direction.parse(req.direction)
        dens: PiecewiseDensity = density_for(tree, req.level, direction, req.window)
        point_value = None
        if req.x is not None:
            point_value = dens.evaluate(req.x, strict=req.strict)
        expected = None
        if not dens.windowed and req.level <= tree.max_depth:
            params = tree.params
            expected = (
                params.weight(req.level)
                * params.scale(req.level) ** 2
                * tree.count(req.level)
            )
        return DensityResponse(
            density=dens.to_payload(),
            mass=dens.mass(),
            count=tree.count(req.level) if req.level <= tree.max_depth else -1,
            mass_identity_expected=expected,
            point_value=point_value,
            csv=dens.sample_csv(req.samples) if req.samples else None,
        )

    @app.post("/constants", response_model=ConstantsResponse)
    def constants_endpoint(req: ConstantsRequest) -> ConstantsResponse:
        return ConstantsResponse(
            report=constants_report(req.k, req.p, req.delta, req.level, req.big_n)
        )

    @app.post("/verify", response_model=VerifyResponse)
    def verify_endpoint(req: VerifyRequest) -> VerifyResponse:
        tree = _resolve_tree(req.tree_text, req.generate)
        checks = verify_realization(tree, samples=req.samples)
        return VerifyResponse(
            checks=[c.__dict__ for c in checks],
            passed=all(c.passed for c in checks),
        )

    @app.post("/experiment", response_model=ExperimentResponse)
    def experiment_endpoint(req: ExperimentRequest) -> ExperimentResponse:
        config = ExperimentConfig.from_dict(req.config)
        if req.dry_run:
            depth = config._max_materialized_depth()
            return ExperimentResponse(
                status="dry_run",
                exit_code=0,
                feasibility={
                    "deepest_materialized_level": depth,
                    "expected_cells": feasibility_estimate(config.params, depth),
                    "cell_budget": config.cell_budget,
                    "sections": sorted(config.sections),
                },
            )
        result = run_suite(config, workers=req.workers)
        status = {0: "pass", 1: "gate_failed", 2: "infeasible"}[result.exit_code]
        return ExperimentResponse(
            status=status,
            exit_code=result.exit_code,
            report=result.report,
            report_text=result.to_json(),
            csv=result.csv,
            timing=result.timing,
        )

    return app


app = create_app()
