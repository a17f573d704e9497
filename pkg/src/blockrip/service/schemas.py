"""Pydantic request/response models for the service endpoints."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..solver import SolverConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class SolverOptions(BaseModel):
    max_iterations: int = 20000
    primal_tolerance: float = 1e-9
    dual_tolerance: float = 1e-9
    penalty: float = 1.0
    over_relaxation: float = 1.0

    def to_config(self) -> SolverConfig:
        return SolverConfig(
            max_iterations=self.max_iterations,
            primal_tolerance=self.primal_tolerance,
            dual_tolerance=self.dual_tolerance,
            penalty=self.penalty,
            over_relaxation=self.over_relaxation,
        )


class SolveRequest(BaseModel):
    matrix: list[list[float]]
    structure: list[int]
    y: list[float]
    epsilon: float = 0.0
    solver: SolverOptions = Field(default_factory=SolverOptions)


class SolveResponse(BaseModel):
    x_hat: list[float]
    objective: float
    residual_norm: float
    iterations: int
    converged: bool


class RicRequest(BaseModel):
    matrix: list[list[float]]
    structure: list[int]
    k: int
    mode: Literal["exact", "sampled"] = "exact"
    trials: int = 1000
    seed: int = 0
    # with t set, the order becomes min(ceil(t*k), M) and the report carries
    # the recovery-condition check
    t: Optional[float] = None


class ConditionInfo(BaseModel):
    threshold: float
    met: bool
    margin: float


class RicResponse(BaseModel):
    order_k: int
    delta: float
    mode: str
    supports_examined: int
    extremal_support: list[int]
    clamped: bool
    condition: Optional[ConditionInfo] = None


class BoundRequest(BaseModel):
    t: float
    k: int
    delta: float
    epsilon: float = 0.0
    tail: float = 0.0


class BoundResponse(BaseModel):
    noise_coefficient: float
    compressibility_coefficient: float
    total: float
    threshold: float


class DecomposeRequest(BaseModel):
    vector: list[float]
    structure: list[int]
    alpha: float
    k: int
    include_atoms: bool = False


class DecomposeResponse(BaseModel):
    num_atoms: int
    max_recombination_error: float
    weights: Optional[list[float]] = None
    atoms: Optional[list[list[float]]] = None


class CounterexampleRequest(BaseModel):
    t: float
    k: int
    d: int = 1
    epsilon_rip: float = 1.0
    unsafe: bool = False
    # None verifies the RIC whenever the enumeration guard allows it
    verify_rip: Optional[bool] = None
    noise_radii: list[float] = [1e-2, 1e-4, 1e-6]
    seed: int = 0
    solver: SolverOptions = Field(default_factory=SolverOptions)


class RipInfo(BaseModel):
    order: int
    clamped: bool
    delta_tk: float
    threshold: float
    target: float
    analytic_delta: float
    applicable: bool
    ok: bool
    supports_examined: int


class NoiseTrialInfo(BaseModel):
    radius: float
    error: float
    converged: bool


class RecoveryInfo(BaseModel):
    status: str
    objective: float
    gamma0_norm21: float
    x0_norm21: float
    noiseless_error: float
    cone_slack: float
    noise_trials: list[NoiseTrialInfo]


class CounterexampleResponse(BaseModel):
    t: float
    k: int
    d: int
    epsilon_rip: float
    a: int
    a_prime: float
    structure: list[int]
    matrix: list[list[float]]
    gamma: list[float]
    x0: list[float]
    gamma0: list[float]
    norm_ratio: float
    rip: Optional[RipInfo] = None
    recovery: RecoveryInfo


class ExperimentRequest(BaseModel):
    config: dict
    workers: int = 1


class ExperimentResponse(BaseModel):
    kind: str
    output_format: Literal["csv", "json"]
    output_text: str
    summary: dict


class ErrorDetail(BaseModel):
    kind: str
    message: str
