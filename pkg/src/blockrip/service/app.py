"""FastAPI service wrapping the core package.

Every endpoint is stateless: matrices and vectors travel as JSON arrays
(floats serialize with full round-trip precision), experiment campaigns
return their rendered CSV/JSON text so clients control where files land.
Errors carry a machine-readable `kind` the CLI maps to exit codes.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..blocks import BlockStructure, BlockVector, norm_2_1
from ..bounds import BoundInputs, evaluate_bound
from ..errors import (
    CapacityError,
    ConfigurationError,
    CounterexampleInvalidError,
    HypothesisNotMetError,
    InfeasibleProblemError,
)
from ..experiments import ExperimentConfig, run_experiment
from ..polytope import PolytopeSpec, decompose
from ..ric import (
    ENUMERATION_GUARD,
    SensingMatrix,
    check_recovery_condition,
    exact_block_ric,
    recovery_threshold,
    ric_order_for,
    sampled_block_ric,
)
from ..sharpness import construct, verify_recovery_failure, verify_rip_bound
from ..solver import MeasurementInstance, solve
from . import schemas

_ERROR_STATUS = {
    "config": 400,
    "capacity": 409,
    "infeasible": 409,
    "hypothesis": 400,
    "assertion": 500,
}


def _error_response(kind: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=_ERROR_STATUS.get(kind, 400),
        content={"detail": {"kind": kind, "message": message}},
    )


def create_app() -> FastAPI:
    app = FastAPI(title="blockrip", version=__version__)

    @app.exception_handler(ConfigurationError)
    async def _config_error(request: Request, exc: ConfigurationError):
        return _error_response("config", str(exc))

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return _error_response("config", str(exc))

    @app.exception_handler(CapacityError)
    async def _capacity_error(request: Request, exc: CapacityError):
        return _error_response("capacity", str(exc))

    @app.exception_handler(InfeasibleProblemError)
    async def _infeasible_error(request: Request, exc: InfeasibleProblemError):
        return _error_response("infeasible", str(exc))

    @app.exception_handler(HypothesisNotMetError)
    async def _hypothesis_error(request: Request, exc: HypothesisNotMetError):
        return _error_response("hypothesis", str(exc))

    @app.exception_handler(CounterexampleInvalidError)
    async def _invalid_error(request: Request, exc: CounterexampleInvalidError):
        return _error_response("assertion", str(exc))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/solve", response_model=schemas.SolveResponse)
    def solve_endpoint(req: schemas.SolveRequest) -> schemas.SolveResponse:
        structure = BlockStructure(tuple(req.structure))
        matrix = SensingMatrix(np.asarray(req.matrix, dtype=float), structure)
        instance = MeasurementInstance(matrix, np.asarray(req.y, dtype=float), req.epsilon)
        result = solve(instance, req.solver.to_config())
        return schemas.SolveResponse(
            x_hat=[float(v) for v in result.x_hat.values],
            objective=result.objective,
            residual_norm=result.residual_norm,
            iterations=result.iterations,
            converged=result.converged,
        )

    @app.post("/ric", response_model=schemas.RicResponse)
    def ric_endpoint(req: schemas.RicRequest) -> schemas.RicResponse:
        structure = BlockStructure(tuple(req.structure))
        matrix = SensingMatrix(np.asarray(req.matrix, dtype=float), structure)
        condition = None
        if req.t is None:
            order = req.k
            clamped = False
        else:
            wanted = ric_order_for(req.t, req.k)
            order = min(wanted, structure.num_blocks)
            clamped = order < wanted
        if req.mode == "exact":
            report = exact_block_ric(matrix, order)
        else:
            report = sampled_block_ric(matrix, order, req.trials, req.seed)
        if req.t is not None:
            check = check_recovery_condition(report.delta, req.t)
            condition = schemas.ConditionInfo(
                threshold=check.threshold, met=check.met, margin=check.margin
            )
        return schemas.RicResponse(
            order_k=report.order_k,
            delta=report.delta,
            mode=report.mode,
            supports_examined=report.supports_examined,
            extremal_support=list(report.extremal_support),
            clamped=clamped,
            condition=condition,
        )

    @app.post("/bound", response_model=schemas.BoundResponse)
    def bound_endpoint(req: schemas.BoundRequest) -> schemas.BoundResponse:
        value = evaluate_bound(
            BoundInputs(t=req.t, k=req.k, delta_tk=req.delta,
                        epsilon=req.epsilon, tail_norm=req.tail)
        )
        return schemas.BoundResponse(
            noise_coefficient=value.noise_coefficient,
            compressibility_coefficient=value.compressibility_coefficient,
            total=value.total,
            threshold=recovery_threshold(req.t),
        )

    @app.post("/decompose", response_model=schemas.DecomposeResponse)
    def decompose_endpoint(req: schemas.DecomposeRequest) -> schemas.DecomposeResponse:
        structure = BlockStructure(tuple(req.structure))
        v = BlockVector(np.asarray(req.vector, dtype=float), structure)
        spec = PolytopeSpec(alpha=req.alpha, k=req.k)
        result = decompose(v, spec)
        err = float(np.max(np.abs(result.recombine() - v.values)))
        return schemas.DecomposeResponse(
            num_atoms=len(result.atoms),
            max_recombination_error=err,
            weights=[float(w) for w in result.weights] if req.include_atoms else None,
            atoms=[[float(x) for x in atom.values] for atom in result.atoms]
            if req.include_atoms else None,
        )

    @app.post("/counterexample", response_model=schemas.CounterexampleResponse)
    def counterexample_endpoint(req: schemas.CounterexampleRequest) -> schemas.CounterexampleResponse:
        inst = construct(req.t, req.k, req.d, req.epsilon_rip, unsafe=req.unsafe)
        order = min(ric_order_for(inst.t, inst.k), inst.structure.num_blocks)
        feasible = math.comb(inst.structure.num_blocks, order) <= ENUMERATION_GUARD
        do_rip = feasible if req.verify_rip is None else req.verify_rip
        rip = verify_rip_bound(inst) if do_rip else None
        recovery = verify_recovery_failure(
            inst,
            req.solver.to_config(),
            noise_radii=tuple(req.noise_radii),
            seed=req.seed,
        )
        return schemas.CounterexampleResponse(
            t=inst.t,
            k=inst.k,
            d=inst.d,
            epsilon_rip=inst.epsilon_rip,
            a=inst.a,
            a_prime=inst.a_prime,
            structure=list(inst.structure.block_sizes),
            matrix=[[float(x) for x in row] for row in inst.A.entries],
            gamma=[float(x) for x in inst.gamma.values],
            x0=[float(x) for x in inst.x0.values],
            gamma0=[float(x) for x in inst.gamma0.values],
            norm_ratio=norm_2_1(inst.gamma0) / norm_2_1(inst.x0),
            rip=None if rip is None else schemas.RipInfo(
                order=rip.order,
                clamped=rip.clamped,
                delta_tk=rip.delta_tk,
                threshold=rip.threshold,
                target=rip.target,
                analytic_delta=rip.analytic_delta,
                applicable=rip.applicable,
                ok=rip.ok,
                supports_examined=rip.supports_examined,
            ),
            recovery=schemas.RecoveryInfo(
                status=recovery.status,
                objective=recovery.objective,
                gamma0_norm21=recovery.gamma0_norm21,
                x0_norm21=recovery.x0_norm21,
                noiseless_error=recovery.noiseless_error,
                cone_slack=recovery.cone_check.slack,
                noise_trials=[
                    schemas.NoiseTrialInfo(radius=nt.radius, error=nt.error,
                                           converged=nt.converged)
                    for nt in recovery.noise_trials
                ],
            ),
        )

    @app.post("/experiment", response_model=schemas.ExperimentResponse)
    def experiment_endpoint(req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
        config = ExperimentConfig.from_dict(req.config)
        # the service never touches the filesystem; clients write output_path
        result = run_experiment(config, workers=req.workers, write=False)
        return schemas.ExperimentResponse(
            kind=result.kind,
            output_format=result.output_format,
            output_text=result.text,
            summary=result.summary,
        )

    return app


app = create_app()
