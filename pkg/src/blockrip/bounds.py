"""Recovery-error bound under the high-order block RIP condition.

When the sensing matrix has block RIC delta = delta_tk < sqrt((t-1)/t) at
order ceil(t*k), every minimizer x_hat of the mixed l2/l1 program satisfies

    ||x_hat - x||_2 <= noise_coefficient * epsilon
                       + compressibility_coefficient * 2*||tail||_{2,1}/sqrt(k)

where the tail is x outside its k largest blocks. This module evaluates the
two coefficients, checks the cone constraint obeyed by any minimizer, and
verifies the bound against solver outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import BlockVector, complement_indices, norm_2_1, norm_2_2, restrict, top_k_blocks
from .ric import ConditionCheck, RicReport, check_recovery_condition, recovery_threshold, ric_order_for
from .solver import MeasurementInstance, SolverResult

__all__ = [
    "BoundInputs",
    "BoundValue",
    "ConeCheck",
    "GuaranteeCheck",
    "evaluate_bound",
    "check_cone_constraint",
    "verify_guarantee",
]

# the theorem speaks about exact minimizers; solver outputs get this allowance
BOUND_COMPARISON_SLACK = 1e-6


@dataclass(frozen=True)
class BoundInputs:
    """Everything the error bound depends on."""

    t: float
    k: int
    delta_tk: float
    epsilon: float
    tail_norm: float

    def __post_init__(self) -> None:
        if not float(self.t) > 1.0:
            raise ValueError(f"t={self.t} must be > 1")
        if int(self.k) < 1:
            raise ValueError(f"k={self.k} must be >= 1")
        if float(self.delta_tk) < 0.0:
            raise ValueError(f"delta_tk={self.delta_tk} must be nonnegative")
        if float(self.epsilon) < 0.0:
            raise ValueError(f"epsilon={self.epsilon} must be nonnegative")
        if float(self.tail_norm) < 0.0:
            raise ValueError(f"tail_norm={self.tail_norm} must be nonnegative")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "delta_tk", float(self.delta_tk))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "tail_norm", float(self.tail_norm))


@dataclass(frozen=True)
class BoundValue:
    noise_coefficient: float
    compressibility_coefficient: float
    total: float


@dataclass(frozen=True)
class ConeCheck:
    """Cone constraint ||h[G^c]||_{2,1} <= ||h[G]||_{2,1} + 2*||x[G^c]||_{2,1}."""

    holds: bool
    slack: float
    lhs: float
    rhs: float


@dataclass(frozen=True)
class GuaranteeCheck:
    """Outcome of comparing a solver output against the error bound.

    `passed` is None when the RIP condition failed or the solver did not
    converge; the bound asserts nothing in either case.
    """

    condition: ConditionCheck
    delta_tk: float
    order: int
    clamped: bool
    solver_converged: bool
    observed_error: float
    bound: BoundValue | None
    passed: bool | None


def evaluate_bound(inputs: BoundInputs) -> BoundValue:
    """Evaluate both bound coefficients and the total.

    Requires delta_tk strictly below sqrt((t-1)/t); the bound is undefined at
    and above the threshold (it diverges as delta approaches it).
    """
    t = inputs.t
    delta = inputs.delta_tk
    threshold = recovery_threshold(t)
    if delta >= threshold:
        raise ValueError(
            f"delta_tk={delta!r} is not below the recovery threshold "
            f"{threshold!r} for t={t!r}; the bound is undefined"
        )
    gap = threshold - delta
    denom = t * gap
    noise = 2.0 * math.sqrt(2.0 * t * (t - 1.0) * (1.0 + delta)) / denom
    compress = (math.sqrt(2.0) * delta + math.sqrt(t * gap * delta)) / denom + 1.0
    total = noise * inputs.epsilon + compress * (2.0 * inputs.tail_norm / math.sqrt(inputs.k))
    return BoundValue(
        noise_coefficient=noise,
        compressibility_coefficient=compress,
        total=total,
    )


def check_cone_constraint(x: BlockVector, x_hat: BlockVector, gamma) -> ConeCheck:
    """Evaluate the cone constraint for h = x_hat - x on block set gamma.

    The inequality holds whenever x_hat minimizes the mixed norm over a
    constraint set containing x; this is a pure evaluator and does not verify
    that premise.
    """
    if x.structure != x_hat.structure:
        raise ValueError("x and x_hat must share a block structure")
    idx = x.structure.check_indices(gamma)
    comp = complement_indices(idx, x.structure)
    h = BlockVector(x_hat.values - x.values, x.structure)
    lhs = norm_2_1(restrict(h, comp))
    rhs = norm_2_1(restrict(h, idx)) + 2.0 * norm_2_1(restrict(x, comp))
    return ConeCheck(holds=lhs <= rhs, slack=rhs - lhs, lhs=lhs, rhs=rhs)


def verify_guarantee(
    instance: MeasurementInstance,
    x_true: BlockVector,
    k: int,
    t: float,
    result: SolverResult,
    ric: RicReport,
) -> GuaranteeCheck:
    """Check a solver output against the error bound certified by `ric`.

    `ric` must be an exact certificate at order min(ceil(t*k), M) for the
    instance matrix; sampled lower bounds cannot support an assertion.
    x_true must be feasible (||y - A x_true||_2 <= epsilon).
    """
    k = int(k)
    if ric.mode != "exact":
        raise ValueError("only exact RIC certificates support guarantee checks")
    M = instance.A.structure.num_blocks
    order = ric_order_for(t, k)
    clamped = order > M
    expected = min(order, M)
    if ric.order_k != expected:
        raise ValueError(
            f"certificate is at order {ric.order_k} but the condition needs "
            f"order {expected}"
        )
    if x_true.structure != instance.A.structure:
        raise ValueError("x_true structure does not match the instance matrix")
    feas = float(np.linalg.norm(instance.y - instance.A.entries @ x_true.values))
    feas_allow = instance.epsilon + 1e-9 * max(1.0, instance.epsilon, float(np.linalg.norm(instance.y)))
    if feas > feas_allow:
        raise ValueError(
            f"x_true is not feasible: residual {feas!r} exceeds epsilon "
            f"{instance.epsilon!r}"
        )

    condition = check_recovery_condition(ric.delta, t)
    observed = float(np.linalg.norm(result.x_hat.values - x_true.values))
    if not condition.met:
        return GuaranteeCheck(
            condition=condition,
            delta_tk=ric.delta,
            order=expected,
            clamped=clamped,
            solver_converged=result.converged,
            observed_error=observed,
            bound=None,
            passed=None,
        )

    tail_idx = complement_indices(top_k_blocks(x_true, k), x_true.structure)
    tail = norm_2_1(restrict(x_true, tail_idx))
    bound = evaluate_bound(
        BoundInputs(t=t, k=k, delta_tk=ric.delta, epsilon=instance.epsilon, tail_norm=tail)
    )
    passed: bool | None
    if not result.converged:
        passed = None
    else:
        allow = BOUND_COMPARISON_SLACK * max(1.0, norm_2_2(x_true))
        passed = observed <= bound.total + allow
    return GuaranteeCheck(
        condition=condition,
        delta_tk=ric.delta,
        order=expected,
        clamped=clamped,
        solver_converged=result.converged,
        observed_error=observed,
        bound=bound,
        passed=passed,
    )
