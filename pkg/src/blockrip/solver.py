"""First-order solver for block-sparse recovery.

Solves  min ||x||_{2,1}  subject to  ||y - A x||_2 <= epsilon
by ADMM on the splitting (v = x, w = A x): the x-update solves a regularized
least-squares system through a cached Cholesky factorization of
(A^T A + rho I), the v-update is the block soft-threshold, and the w-update
projects onto the residual ball. Handles epsilon = 0 and epsilon > 0
uniformly and is deterministic given the instance and config.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .blocks import BlockStructure, BlockVector, norm_2_1
from .errors import InfeasibleProblemError
from .ric import SensingMatrix

__all__ = [
    "FEASIBILITY_SLACK",
    "OPTIMALITY_SLACK",
    "MeasurementInstance",
    "SolverConfig",
    "SolverResult",
    "block_shrink",
    "project_residual_ball",
    "solve",
]

# contract constants: converged results satisfy
#   residual_norm <= epsilon + FEASIBILITY_SLACK * max(1, ||y||_2)
# and are within OPTIMALITY_SLACK * max(1, ||w||_{2,1}) of any feasible w
FEASIBILITY_SLACK = 1e-6
OPTIMALITY_SLACK = 1e-6

# iterations of no residual progress above the ball before declaring infeasible
_STALL_LIMIT = 1000


@dataclass(frozen=True, eq=False)
class MeasurementInstance:
    """Sensing matrix, observation, and noise level of one recovery problem."""

    A: SensingMatrix
    y: np.ndarray
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if y.size != self.A.num_rows:
            raise ValueError(
                f"observation length {y.size} does not match the matrix row "
                f"count {self.A.num_rows}"
            )
        if not float(self.epsilon) >= 0.0:
            raise ValueError(f"epsilon={self.epsilon} must be nonnegative")
        y.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "epsilon", float(self.epsilon))


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 20000
    primal_tolerance: float = 1e-9
    dual_tolerance: float = 1e-9
    penalty: float = 1.0
    over_relaxation: float = 1.0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not (self.primal_tolerance > 0 and self.dual_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if not 1.0 <= self.over_relaxation < 2.0:
            raise ValueError("over_relaxation must lie in [1, 2)")


@dataclass(frozen=True, eq=False)
class SolverResult:
    x_hat: BlockVector
    objective: float
    residual_norm: float
    iterations: int
    converged: bool


def _block_scales(values: np.ndarray, structure: BlockStructure, tau: float) -> np.ndarray:
    sums = np.add.reduceat(values * values, structure._starts)
    norms = np.sqrt(sums)
    safe = np.where(norms > 0.0, norms, 1.0)
    return np.where(norms > tau, 1.0 - tau / safe, 0.0)


def _shrink_values(values: np.ndarray, structure: BlockStructure, tau: float) -> np.ndarray:
    if tau == 0.0:
        return values.copy()
    scales = _block_scales(values, structure, tau)
    return values * np.repeat(scales, structure.block_sizes)


def block_shrink(v: BlockVector, tau: float) -> BlockVector:
    """Proximal operator of tau*||.||_{2,1}: per block,
    max(0, 1 - tau/||v[i]||_2) * v[i]."""
    tau = float(tau)
    if tau < 0.0:
        raise ValueError(f"tau={tau} must be nonnegative")
    return BlockVector(_shrink_values(v.values, v.structure, tau), v.structure)


def project_residual_ball(w: np.ndarray, y: np.ndarray, epsilon: float) -> np.ndarray:
    """Euclidean projection of w onto {u : ||u - y||_2 <= epsilon}."""
    w = np.asarray(w, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if w.size != y.size:
        raise ValueError(f"length mismatch {w.size} vs {y.size}")
    epsilon = float(epsilon)
    if epsilon < 0.0:
        raise ValueError(f"epsilon={epsilon} must be nonnegative")
    diff = w - y
    dist = float(np.linalg.norm(diff))
    if dist <= epsilon:
        return w.copy()
    if epsilon == 0.0:
        return y.copy()
    return y + (epsilon / dist) * diff


def solve(instance: MeasurementInstance, config: SolverConfig | None = None) -> SolverResult:
    """Minimize the mixed l2/l1 norm over the residual ball.

    Returns the block-shrunk iterate, which is exactly block sparse. A result
    with converged=False is returned when the tolerances were not reached
    within max_iterations; it is never silently treated as optimal. Raises
    InfeasibleProblemError when the residual provably stalls above the ball
    (e.g. y outside the range of A with epsilon too small).
    """
    if config is None:
        config = SolverConfig()
    A = instance.A.entries
    structure = instance.A.structure
    y = instance.y
    eps = instance.epsilon
    n, N = A.shape
    rho = config.penalty
    alpha = config.over_relaxation
    tau = 1.0 / rho

    factor = cho_factor(A.T @ A + rho * np.eye(N))
    At = A.T

    x = np.zeros(N)
    v = np.zeros(N)
    w = project_residual_ball(np.zeros(n), y, eps)
    u_v = np.zeros(N)
    u_w = np.zeros(n)

    feas_slack = FEASIBILITY_SLACK * max(1.0, float(np.linalg.norm(y)))
    stall_level = eps + 10.0 * feas_slack
    best_residual = np.inf
    stall = 0

    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        rhs = rho * (v - u_v) + At @ (w - u_w)
        x = cho_solve(factor, rhs)
        Ax = A @ x
        qx = alpha * x + (1.0 - alpha) * v
        qA = alpha * Ax + (1.0 - alpha) * w

        v_new = _shrink_values(qx + u_v, structure, tau)
        w_new = project_residual_ball(qA + u_w, y, eps)
        u_v += qx - v_new
        u_w += qA - w_new

        r_primal = np.sqrt(
            float(np.linalg.norm(x - v_new)) ** 2 + float(np.linalg.norm(Ax - w_new)) ** 2
        )
        s_dual = float(np.linalg.norm(rho * (v_new - v) + At @ (w_new - w)))
        v, w = v_new, w_new

        eps_primal = config.primal_tolerance * max(
            1.0,
            np.sqrt(float(np.linalg.norm(x)) ** 2 + float(np.linalg.norm(Ax)) ** 2),
            np.sqrt(float(np.linalg.norm(v)) ** 2 + float(np.linalg.norm(w)) ** 2),
        )
        eps_dual = config.dual_tolerance * max(
            1.0,
            np.sqrt(float(np.linalg.norm(rho * u_v)) ** 2 + float(np.linalg.norm(At @ u_w)) ** 2),
        )
        if r_primal <= eps_primal and s_dual <= eps_dual:
            converged = True
            break

        residual = float(np.linalg.norm(y - A @ v))
        if residual > stall_level:
            if residual >= best_residual - 1e-12 * max(1.0, best_residual):
                stall += 1
            else:
                stall = 0
        else:
            stall = 0
        best_residual = min(best_residual, residual)
        if stall >= _STALL_LIMIT:
            raise InfeasibleProblemError(
                f"residual stalled at {residual:.6e}, above epsilon + slack = "
                f"{stall_level:.6e}, for {_STALL_LIMIT} iterations"
            )

    x_hat = BlockVector(v, structure)
    return SolverResult(
        x_hat=x_hat,
        objective=norm_2_1(x_hat),
        residual_norm=float(np.linalg.norm(y - A @ v)),
        iterations=iterations,
        converged=converged,
    )
