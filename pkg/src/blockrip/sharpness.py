"""Sharpness instance: the recovery threshold cannot be weakened.

For t >= 4/3 and k >= 5/eps the construction produces an N-by-N sensing map
whose block RIC at order ceil(t*k) is at most sqrt((t-1)/t) + eps, together
with a block k-sparse signal x0 that mixed l2/l1 minimization provably never
recovers: a disjointly supported competitor gamma0 has the same image and a
strictly smaller mixed norm. The map is scaled projection removal,
A = sqrt(1 + sqrt((t-1)/t)) * (I - gamma gamma^T), with unit kernel direction
gamma proportional to x0 - gamma0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import BlockStructure, BlockVector, norm_2_1, top_k_blocks
from .bounds import ConeCheck, check_cone_constraint
from .errors import CounterexampleInvalidError
from .ric import ENUMERATION_GUARD, RicReport, SensingMatrix, exact_block_ric, recovery_threshold, ric_order_for
from .solver import MeasurementInstance, SolverConfig, SolverResult, solve

__all__ = [
    "CounterexampleInstance",
    "RipBoundReport",
    "NoiseTrial",
    "RecoveryFailureReport",
    "construct",
    "analytic_block_ric",
    "verify_rip_bound",
    "verify_recovery_failure",
]

# |a' - round(a')| below this treats a' as an integer when picking the
# largest integer strictly smaller than a'
_INTEGER_DETECT = 1e-9

# displacement every verified instance must show between x_hat and x0
MIN_DISPLACEMENT = 0.1

# absolute slack when comparing the solver objective to the competitor norm
OBJECTIVE_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class CounterexampleInstance:
    """The sharpness tuple: scaled projection map, planted signal, competitor."""

    t: float
    k: int
    d: int
    epsilon_rip: float
    a_prime: float
    a: int
    gamma: BlockVector
    A: SensingMatrix
    x0: BlockVector
    gamma0: BlockVector
    structure: BlockStructure

    @property
    def analytic_applicable(self) -> bool:
        """Whether the RIC upper bound sqrt((t-1)/t) + eps is guaranteed."""
        return self.t >= 4.0 / 3.0 - 1e-12 and self.k >= 5.0 / self.epsilon_rip - 1e-9


@dataclass(frozen=True)
class RipBoundReport:
    order: int
    clamped: bool
    delta_tk: float
    threshold: float
    target: float
    analytic_delta: float
    applicable: bool
    ok: bool
    supports_examined: int


@dataclass(frozen=True)
class NoiseTrial:
    radius: float
    error: float
    converged: bool


@dataclass(frozen=True, eq=False)
class RecoveryFailureReport:
    status: str  # "pass" | "fail" | "inconclusive"
    objective: float
    gamma0_norm21: float
    x0_norm21: float
    noiseless_error: float
    noise_trials: tuple[NoiseTrial, ...]
    cone_check: ConeCheck
    result: SolverResult

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def construct(t: float, k: int, d: int, epsilon_rip: float, unsafe: bool = False) -> CounterexampleInstance:
    """Build the sharpness instance for (t, k, d, epsilon_rip).

    Requires t >= 4/3 and k >= 5/epsilon_rip unless `unsafe` is set, in which
    case the instance is built mechanically and the RIC bound claim is not
    guaranteed (recovery failure still is, since the competitor always has a
    strictly smaller mixed norm).
    """
    t = float(t)
    k = int(k)
    d = int(d)
    epsilon_rip = float(epsilon_rip)
    if not t > 1.0:
        raise ValueError(f"t={t} must be > 1")
    if k < 1 or d < 1:
        raise ValueError(f"k={k} and d={d} must be >= 1")
    if not epsilon_rip > 0.0:
        raise ValueError(f"epsilon_rip={epsilon_rip} must be positive")
    if not unsafe:
        if t < 4.0 / 3.0 - 1e-12:
            raise ValueError(f"t={t} must be >= 4/3 (pass unsafe=True to override)")
        if k < 5.0 / epsilon_rip - 1e-9:
            raise ValueError(
                f"k={k} is below 5/epsilon_rip = {5.0 / epsilon_rip!r} "
                f"(pass unsafe=True to override)"
            )

    a_prime = ((t - 1.0) + math.sqrt(t * (t - 1.0))) * k
    if abs(a_prime - round(a_prime)) <= _INTEGER_DETECT * max(1.0, a_prime):
        a = int(round(a_prime)) - 1
    else:
        a = int(math.floor(a_prime))
    if a < 1:
        raise ValueError(
            f"a' = {a_prime!r} leaves no room for a competitor block "
            f"(largest integer strictly below a' is {a})"
        )

    structure = BlockStructure.equal_blocks(k + a, d)
    N = structure.dimension
    g = np.concatenate([np.ones(k * d), np.full(a * d, -k / a_prime)])
    gamma_vals = g / np.linalg.norm(g)
    scale = math.sqrt(1.0 + recovery_threshold(t))
    A_entries = scale * (np.eye(N) - np.outer(gamma_vals, gamma_vals))
    x0_vals = np.concatenate([np.ones(k * d), np.zeros(a * d)])
    gamma0_vals = np.concatenate([np.zeros(k * d), np.full(a * d, k / a_prime)])

    return CounterexampleInstance(
        t=t,
        k=k,
        d=d,
        epsilon_rip=epsilon_rip,
        a_prime=a_prime,
        a=a,
        gamma=BlockVector(gamma_vals, structure),
        A=SensingMatrix(A_entries, structure),
        x0=BlockVector(x0_vals, structure),
        gamma0=BlockVector(gamma0_vals, structure),
        structure=structure,
    )


def analytic_block_ric(inst: CounterexampleInstance, order: int) -> float:
    """Closed-form block RIC of the scaled projection map at a given order.

    ||Ax||^2 = s^2 (||x||^2 - <gamma,x>^2), so per support the extreme
    Rayleigh quotients are s^2 (any direction orthogonal to gamma on the
    support) and s^2 (1 - ||gamma[S]||^2) (the direction of gamma on the
    support); the worst support takes gamma's largest blocks.
    """
    order = int(order)
    M = inst.structure.num_blocks
    if not 1 <= order <= M:
        raise ValueError(f"order={order} must be in [1, {M}]")
    s2 = 1.0 + recovery_threshold(inst.t)
    norms = np.sort(inst.gamma.block_norms())[::-1]
    top_mass = float(np.sum(norms[:order] ** 2))
    upper = s2 - 1.0
    lower = 1.0 - s2 * (1.0 - top_mass)
    return max(upper, lower)


def verify_rip_bound(inst: CounterexampleInstance) -> RipBoundReport:
    """Certify by exhaustive enumeration that the RIC stays within its target.

    Computes the exact block RIC at order min(ceil(t*k), M) and checks it
    against sqrt((t-1)/t) + epsilon_rip. For instances built with the stated
    preconditions a failed check raises CounterexampleInvalidError (it should
    be unreachable); for unsafe instances the outcome is only recorded.
    Raises CapacityError when the support count exceeds the enumeration guard.
    """
    M = inst.structure.num_blocks
    order = ric_order_for(inst.t, inst.k)
    clamped = order > M
    order = min(order, M)
    report: RicReport = exact_block_ric(inst.A, order)
    threshold = recovery_threshold(inst.t)
    target = threshold + inst.epsilon_rip
    ok = report.delta <= target + 1e-12
    applicable = inst.analytic_applicable
    if applicable and not ok:
        raise CounterexampleInvalidError(
            f"exact delta at order {order} is {report.delta!r}, above the "
            f"guaranteed target {target!r}"
        )
    return RipBoundReport(
        order=order,
        clamped=clamped,
        delta_tk=report.delta,
        threshold=threshold,
        target=target,
        analytic_delta=analytic_block_ric(inst, order),
        applicable=applicable,
        ok=ok,
        supports_examined=report.supports_examined,
    )


def verify_recovery_failure(
    inst: CounterexampleInstance,
    solver_config: SolverConfig | None = None,
    noise_radii: tuple[float, ...] = (1e-2, 1e-4, 1e-6),
    seed: int = 0,
) -> RecoveryFailureReport:
    """Demonstrate that minimization prefers the competitor over x0.

    Noiseless path: solves with y = A x0, epsilon = 0 and requires the
    objective to reach ||gamma0||_{2,1} + slack, strictly below ||x0||_{2,1},
    which forces x_hat away from x0. Noise path: for each radius r a
    direction is drawn from `seed`, y = A x0 + z with ||z||_2 = r and
    epsilon = r; the recovery error must stay above half the noiseless gap,
    so the error does not vanish as the noise does. Solver non-convergence
    yields status 'inconclusive', never a pass.
    """
    y0 = inst.A.entries @ inst.x0.values
    result = solve(MeasurementInstance(inst.A, y0, 0.0), solver_config)
    gamma0_norm = norm_2_1(inst.gamma0)
    x0_norm = norm_2_1(inst.x0)
    noiseless_error = float(np.linalg.norm(result.x_hat.values - inst.x0.values))
    cone = check_cone_constraint(inst.x0, result.x_hat, top_k_blocks(inst.x0, inst.k))

    inconclusive = not result.converged
    objective_ok = result.objective <= gamma0_norm + OBJECTIVE_SLACK
    displaced = noiseless_error > MIN_DISPLACEMENT

    rng = np.random.default_rng(seed)
    trials: list[NoiseTrial] = []
    noise_ok = True
    for radius in noise_radii:
        direction = rng.standard_normal(inst.A.num_rows)
        z = (float(radius) / float(np.linalg.norm(direction))) * direction
        noisy = solve(MeasurementInstance(inst.A, y0 + z, float(radius)), solver_config)
        err = float(np.linalg.norm(noisy.x_hat.values - inst.x0.values))
        trials.append(NoiseTrial(radius=float(radius), error=err, converged=noisy.converged))
        if not noisy.converged:
            inconclusive = True
        elif err < 0.5 * noiseless_error:
            noise_ok = False

    if inconclusive:
        status = "inconclusive"
    elif objective_ok and displaced and noise_ok:
        status = "pass"
    else:
        status = "fail"
    return RecoveryFailureReport(
        status=status,
        objective=result.objective,
        gamma0_norm21=gamma0_norm,
        x0_norm21=x0_norm,
        noiseless_error=noiseless_error,
        noise_trials=tuple(trials),
        cone_check=cone,
        result=result,
    )
