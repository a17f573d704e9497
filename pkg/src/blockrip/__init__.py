"""Block-sparse signal recovery by mixed l2/l1 minimization.

Library layout:

- ``blocks``      block structures, block vectors, mixed norms
- ``ric``         block restricted-isometry constants (exact and sampled)
- ``solver``      ADMM solver for the constrained mixed-norm program
- ``polytope``    convex decomposition of the block polytope; tail inequality
- ``bounds``      recovery-error bound, cone constraint, guarantee checks
- ``sharpness``   counterexample showing the recovery threshold is sharp
- ``experiments`` seeded campaigns with deterministic CSV/JSON outputs
- ``service``     FastAPI app exposing the above
- ``cli``         thin command-line client for the service
"""

__version__ = "0.1.0"

from .blocks import (
    BlockStructure,
    BlockVector,
    best_block_k_approx,
    block_support,
    complement_indices,
    norm_2_0,
    norm_2_1,
    norm_2_2,
    norm_2_inf,
    restrict,
    top_k_blocks,
)
from .bounds import BoundInputs, BoundValue, check_cone_constraint, evaluate_bound, verify_guarantee
from .errors import (
    CapacityError,
    ConfigurationError,
    CounterexampleInvalidError,
    HypothesisNotMetError,
    InfeasibleProblemError,
)
from .experiments import ExperimentConfig, ExperimentResult, run_experiment
from .polytope import (
    ConvexDecomposition,
    PolytopeSpec,
    check_tail_power_inequality,
    decompose,
    in_atom_set,
    in_polytope,
)
from .ric import (
    RicReport,
    SensingMatrix,
    check_recovery_condition,
    exact_block_ric,
    recovery_threshold,
    ric_order_for,
    sampled_block_ric,
)
from .sharpness import CounterexampleInstance, construct, verify_recovery_failure, verify_rip_bound
from .solver import (
    MeasurementInstance,
    SolverConfig,
    SolverResult,
    block_shrink,
    project_residual_ball,
    solve,
)

__all__ = [
    "__version__",
    "BlockStructure",
    "BlockVector",
    "best_block_k_approx",
    "block_support",
    "complement_indices",
    "norm_2_0",
    "norm_2_1",
    "norm_2_2",
    "norm_2_inf",
    "restrict",
    "top_k_blocks",
    "BoundInputs",
    "BoundValue",
    "check_cone_constraint",
    "evaluate_bound",
    "verify_guarantee",
    "CapacityError",
    "ConfigurationError",
    "CounterexampleInvalidError",
    "HypothesisNotMetError",
    "InfeasibleProblemError",
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "ConvexDecomposition",
    "PolytopeSpec",
    "check_tail_power_inequality",
    "decompose",
    "in_atom_set",
    "in_polytope",
    "RicReport",
    "SensingMatrix",
    "check_recovery_condition",
    "exact_block_ric",
    "recovery_threshold",
    "ric_order_for",
    "sampled_block_ric",
    "CounterexampleInstance",
    "construct",
    "verify_recovery_failure",
    "verify_rip_bound",
    "MeasurementInstance",
    "SolverConfig",
    "SolverResult",
    "block_shrink",
    "project_residual_ball",
    "solve",
]
