"""Embedded-style second-order-cone MPC solver with cached LQR structure.

The package splits the work the way an embedded deployment would:

* offline: validate the problem, find the infinite-horizon pair, build the
  solver cache (``problem``, ``riccati``),
* online: a division-free, allocation-free operator-splitting loop over
  cached matrices (``solver``, ``projections``),
* around it: independent oracles, closed-loop benchmark scenarios, a
  static-memory code generator, problem-file I/O, and a CLI.
"""

from .problem import (
    AsymmetricCost,
    BoundsInverted,
    ConeOverlap,
    ConeSlice,
    ConstraintSet,
    CostData,
    DimensionMismatch,
    LinearDynamics,
    NonFiniteEntry,
    ProblemDefinition,
    ProblemDims,
    QNotPositiveSemidefinite,
    References,
    RNotPositiveDefinite,
    Settings,
    SolveReport,
    Status,
    ValidatedProblem,
    ValidationError,
    Workspace,
    refs_to_linear_cost,
    trajectory_cost,
    validate,
)
from .projections import project_box, project_slacks, project_soc
from .riccati import (
    FactorizationFailure,
    NoConvergence,
    RiccatiError,
    SolverCache,
    augment_costs,
    build_cache,
    compute_infinite_horizon,
    make_cache,
)
from .solver import (
    backward_pass,
    compute_residuals,
    dual_update,
    forward_pass,
    iterate,
    slack_update,
    solve,
    update_linear_costs,
    warm_start_shift,
)

from ._version import __version__

__all__ = [
    "AsymmetricCost",
    "BoundsInverted",
    "ConeOverlap",
    "ConeSlice",
    "ConstraintSet",
    "CostData",
    "DimensionMismatch",
    "FactorizationFailure",
    "LinearDynamics",
    "NoConvergence",
    "NonFiniteEntry",
    "ProblemDefinition",
    "ProblemDims",
    "QNotPositiveSemidefinite",
    "References",
    "RiccatiError",
    "RNotPositiveDefinite",
    "Settings",
    "SolveReport",
    "SolverCache",
    "Status",
    "ValidatedProblem",
    "ValidationError",
    "Workspace",
    "augment_costs",
    "backward_pass",
    "build_cache",
    "compute_infinite_horizon",
    "compute_residuals",
    "dual_update",
    "forward_pass",
    "iterate",
    "make_cache",
    "project_box",
    "project_slacks",
    "project_soc",
    "refs_to_linear_cost",
    "slack_update",
    "solve",
    "trajectory_cost",
    "update_linear_costs",
    "validate",
    "warm_start_shift",
    "__version__",
]
