"""Problem data model: dimensions, dynamics, costs, constraints, workspace.

A problem is assembled from plain dataclasses, passed through
:func:`validate` once, and the resulting :class:`ValidatedProblem` is what
the solver, oracles, and code generator consume. Validation is pure: it
never mutates its input and returns cleaned copies.

Conventions used throughout the package:

* a horizon of ``N`` knot points carries states ``x[0..N-1]`` and inputs
  ``u[0..N-2]`` (one fewer input than states),
* ``x[0]`` is pinned to the measured initial state,
* second-order cones apply per stage to a contiguous index slice whose last
  entry is the cone apex: ``norm(v) <= a`` for ``v = slice[:-1]``,
  ``a = slice[-1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from . import alloc

__all__ = [
    "ValidationError",
    "NonFiniteEntry",
    "DimensionMismatch",
    "AsymmetricCost",
    "QNotPositiveSemidefinite",
    "RNotPositiveDefinite",
    "ConeOverlap",
    "BoundsInverted",
    "ProblemDims",
    "LinearDynamics",
    "CostData",
    "ConeSlice",
    "ConstraintSet",
    "Settings",
    "References",
    "ProblemDefinition",
    "ValidatedProblem",
    "Workspace",
    "Status",
    "SolveReport",
    "validate",
    "refs_to_linear_cost",
    "trajectory_cost",
]

# Relative symmetry slack for cost matrices; anything worse is a user error.
_SYM_RTOL = 1e-12
# Relative eigenvalue floor when testing Q for positive semidefiniteness.
_PSD_RTOL = 1e-10


class ValidationError(ValueError):
    """Problem data violates an invariant; the subclass names which one."""


class NonFiniteEntry(ValidationError):
    """An array contains NaN, or an Inf where Inf is not a legal bound."""


class DimensionMismatch(ValidationError):
    """Array shapes, horizon length, or cone slices are inconsistent."""


class AsymmetricCost(ValidationError):
    """Q or R is asymmetric beyond roundoff."""


class QNotPositiveSemidefinite(ValidationError):
    """State cost matrix has a meaningfully negative eigenvalue."""


class RNotPositiveDefinite(ValidationError):
    """Input cost matrix is not positive definite."""


class ConeOverlap(ValidationError):
    """Cone slices overlap each other or a finitely bounded coordinate."""


class BoundsInverted(ValidationError):
    """A lower bound exceeds its upper bound."""


@dataclass(frozen=True)
class ProblemDims:
    """State size ``n``, input size ``m``, horizon length ``N`` (knot points)."""

    n: int
    m: int
    N: int


@dataclass(frozen=True)
class LinearDynamics:
    """x_next = A x + B u + c with a constant affine offset c."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class CostData:
    """Quadratic stage cost 0.5 x'Qx + q'x + 0.5 u'Ru + r'u.

    ``q`` and ``r`` are per-stage linear terms, shaped (N, n) and (N-1, m).
    They are the only mutable part of a validated problem: receding-horizon
    drivers rewrite their contents in place between solves.
    """

    Q: np.ndarray
    R: np.ndarray
    q: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ConeSlice:
    """Contiguous coordinate slice [start, start+len) forming one cone."""

    start: int
    len: int


@dataclass(frozen=True)
class ConstraintSet:
    """Box bounds and per-stage second-order cones on states and inputs.

    Bounds may be None (absent) or arrays with +-inf marking unbounded
    coordinates. A coordinate inside a cone slice must not also carry a
    finite bound.
    """

    x_min: Optional[np.ndarray] = None
    x_max: Optional[np.ndarray] = None
    u_min: Optional[np.ndarray] = None
    u_max: Optional[np.ndarray] = None
    state_cones: Tuple[ConeSlice, ...] = ()
    input_cones: Tuple[ConeSlice, ...] = ()


@dataclass(frozen=True)
class Settings:
    """Solver knobs. All tolerances and the penalty must be positive."""

    rho: float = 1.0
    abs_pri_tol: float = 1e-3
    abs_dua_tol: float = 1e-3
    max_iter: int = 500
    check_termination: int = 10
    en_state_bound: bool = True
    en_input_bound: bool = True
    en_state_soc: bool = True
    en_input_soc: bool = True

    def __post_init__(self) -> None:
        if not (self.rho > 0.0 and np.isfinite(self.rho)):
            raise ValueError("rho must be a positive finite number")
        for name in ("abs_pri_tol", "abs_dua_tol"):
            v = getattr(self, name)
            if not (v > 0.0 and np.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite number")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.check_termination < 0:
            raise ValueError("check_termination must be nonnegative (0 disables checks)")


@dataclass(frozen=True)
class References:
    """Tracking references: states shaped (N, n), inputs shaped (N-1, m)."""

    x_ref: np.ndarray
    u_ref: np.ndarray


@dataclass(frozen=True)
class ProblemDefinition:
    """Raw user-supplied problem, not yet checked."""

    dims: ProblemDims
    dynamics: LinearDynamics
    cost: CostData
    constraints: ConstraintSet = ConstraintSet()


@dataclass(frozen=True)
class ValidatedProblem:
    """Cleaned problem produced by :func:`validate`.

    Arrays are float64, C-contiguous copies. Q and R have been exactly
    symmetrized. Bounds are either None or full-length arrays with +-inf
    filling unbounded coordinates; ``has_*_bounds`` says whether any entry
    is finite. The linear cost buffers ``cost.q`` / ``cost.r`` are mutable
    by design; everything else must be treated as read-only.
    """

    dims: ProblemDims
    dynamics: LinearDynamics
    cost: CostData
    constraints: ConstraintSet
    has_state_bounds: bool
    has_input_bounds: bool


class Status(Enum):
    UNSOLVED = 0
    SOLVED = 1
    MAX_ITERS = 2


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``x`` and ``u`` reference workspace-owned report buffers: they stay
    valid until the next solve on the same workspace, and callers who need
    to keep them longer must copy.
    """

    status: Status
    iterations: int
    pri_res: float
    dua_res: float
    x: np.ndarray
    u: np.ndarray


class Workspace:
    """Preallocated solver state for one problem size.

    Holds every buffer the solve loop touches, including scratch, so a
    solve performs no array allocation at all. Iterate buffers double as
    warm-start inputs: leave them from the previous solve to warm start,
    call :meth:`zero` to cold start.
    """

    def __init__(self, dims: ProblemDims) -> None:
        n, m, N = dims.n, dims.m, dims.N
        if N < 2:
            raise DimensionMismatch("horizon must have at least 2 knot points")
        self.dims = dims
        # Primal iterates and Riccati recursion terms.
        self.x = alloc.new_array((N, n))
        self.u = alloc.new_array((N - 1, m))
        self.p = alloc.new_array((N, n))
        self.d = alloc.new_array((N - 1, m))
        # Slacks, their previous values, and scaled duals.
        self.z = alloc.new_array((N, n))
        self.w = alloc.new_array((N - 1, m))
        self.z_prev = alloc.new_array((N, n))
        self.w_prev = alloc.new_array((N - 1, m))
        self.y = alloc.new_array((N, n))
        self.g = alloc.new_array((N - 1, m))
        # Penalty-augmented linear costs rebuilt every iteration.
        self.qt = alloc.new_array((N, n))
        self.rt = alloc.new_array((N - 1, m))
        # Scratch vectors for the fixed-order kernels.
        self.scr_n = alloc.new_array(n)
        self.scr_n2 = alloc.new_array(n)
        self.scr_m = alloc.new_array(m)
        self.scr_m2 = alloc.new_array(m)
        # Trajectory-shaped scratch for residual evaluation.
        self.scr_x = alloc.new_array((N, n))
        self.scr_u = alloc.new_array((N - 1, m))
        # Report buffers handed out by reference; valid until the next solve.
        self.report_x = alloc.new_array((N, n))
        self.report_u = alloc.new_array((N - 1, m))
        self.pri_res = float("inf")
        self.dua_res = float("inf")
        self.iterations = 0
        self.status = Status.UNSOLVED

    def zero(self) -> None:
        """Reset all iterate state for a cold start. Allocates nothing."""
        for arr in (
            self.x,
            self.u,
            self.p,
            self.d,
            self.z,
            self.w,
            self.z_prev,
            self.w_prev,
            self.y,
            self.g,
            self.qt,
            self.rt,
        ):
            arr.fill(0.0)
        self.pri_res = float("inf")
        self.dua_res = float("inf")
        self.iterations = 0
        self.status = Status.UNSOLVED


def _as_matrix(name: str, value, rows: int, cols: int) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, order="C")
    if arr.shape != (rows, cols):
        raise DimensionMismatch(f"{name} must have shape ({rows}, {cols}), got {arr.shape}")
    return arr


def _as_vector(name: str, value, length: int) -> np.ndarray:
    arr = np.array(value, dtype=np.float64).reshape(-1)
    if arr.shape != (length,):
        raise DimensionMismatch(f"{name} must have length {length}, got shape {arr.shape}")
    return arr


def _require_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry(f"{name} contains a non-finite entry")


def _symmetrize(name: str, mat: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(mat))))
    skew = float(np.max(np.abs(mat - mat.T)))
    if skew > _SYM_RTOL * scale:
        raise AsymmetricCost(f"{name} is asymmetric beyond roundoff (max skew {skew:g})")
    return 0.5 * (mat + mat.T)


def _clean_bound(name: str, value, length: int, fill: float) -> Optional[np.ndarray]:
    if value is None:
        return None
    arr = np.array(value, dtype=np.float64).reshape(-1)
    if arr.shape != (length,):
        raise DimensionMismatch(f"{name} must have length {length}, got shape {arr.shape}")
    if np.any(np.isnan(arr)):
        raise NonFiniteEntry(f"{name} contains NaN")
    return arr


def _check_cones(
    kind: str,
    cones: Sequence[ConeSlice],
    dim: int,
    lo: Optional[np.ndarray],
    hi: Optional[np.ndarray],
) -> Tuple[ConeSlice, ...]:
    taken = np.zeros(dim, dtype=bool)
    cleaned = []
    for cone in cones:
        start, length = int(cone.start), int(cone.len)
        if length < 2:
            raise DimensionMismatch(f"{kind} cone must span at least 2 coordinates")
        if start < 0 or start + length > dim:
            raise DimensionMismatch(
                f"{kind} cone [{start}, {start + length}) falls outside dimension {dim}"
            )
        span = slice(start, start + length)
        if taken[span].any():
            raise ConeOverlap(f"{kind} cones overlap at coordinates {start}..{start + length - 1}")
        taken[span] = True
        for bound in (lo, hi):
            if bound is not None and np.any(np.isfinite(bound[span])):
                raise ConeOverlap(
                    f"{kind} cone [{start}, {start + length}) overlaps a finite box bound"
                )
        cleaned.append(ConeSlice(start, length))
    return tuple(cleaned)


def validate(problem: ProblemDefinition) -> ValidatedProblem:
    """Check every problem invariant and return a cleaned copy.

    Raises the :class:`ValidationError` subclass naming the first violated
    invariant. Does not modify the input; calling twice on the same input
    yields equal results.
    """
    dims = problem.dims
    n, m, N = int(dims.n), int(dims.m), int(dims.N)
    if n < 1 or m < 1:
        raise DimensionMismatch("state and input dimensions must be at least 1")
    if N < 2:
        raise DimensionMismatch("horizon must have at least 2 knot points")
    dims = ProblemDims(n=n, m=m, N=N)

    A = _as_matrix("A", problem.dynamics.A, n, n)
    B = _as_matrix("B", problem.dynamics.B, n, m)
    c = _as_vector("c", problem.dynamics.c, n)
    for name, arr in (("A", A), ("B", B), ("c", c)):
        _require_finite(name, arr)

    Q = _as_matrix("Q", problem.cost.Q, n, n)
    R = _as_matrix("R", problem.cost.R, m, m)
    _require_finite("Q", Q)
    _require_finite("R", R)
    Q = _symmetrize("Q", Q)
    R = _symmetrize("R", R)

    q_scale = max(1.0, float(np.max(np.abs(Q))))
    if float(np.linalg.eigvalsh(Q)[0]) < -_PSD_RTOL * q_scale:
        raise QNotPositiveSemidefinite("Q has a negative eigenvalue")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise RNotPositiveDefinite("R must be positive definite") from None

    if problem.cost.q is None:
        q = np.zeros((N, n))
    else:
        q = np.array(problem.cost.q, dtype=np.float64, order="C")
        if q.shape != (N, n):
            raise DimensionMismatch(f"q must have shape ({N}, {n}), got {q.shape}")
        _require_finite("q", q)
    if problem.cost.r is None:
        r = np.zeros((N - 1, m))
    else:
        r = np.array(problem.cost.r, dtype=np.float64, order="C")
        if r.shape != (N - 1, m):
            raise DimensionMismatch(f"r must have shape ({N - 1}, {m}), got {r.shape}")
        _require_finite("r", r)

    con = problem.constraints
    x_min = _clean_bound("x_min", con.x_min, n, -np.inf)
    x_max = _clean_bound("x_max", con.x_max, n, np.inf)
    u_min = _clean_bound("u_min", con.u_min, m, -np.inf)
    u_max = _clean_bound("u_max", con.u_max, m, np.inf)
    # Normalize one-sided boxes to full pairs so the solver has both arrays.
    if x_min is not None and x_max is None:
        x_max = np.full(n, np.inf)
    if x_max is not None and x_min is None:
        x_min = np.full(n, -np.inf)
    if u_min is not None and u_max is None:
        u_max = np.full(m, np.inf)
    if u_max is not None and u_min is None:
        u_min = np.full(m, -np.inf)
    for lo, hi, label in ((x_min, x_max, "state"), (u_min, u_max, "input")):
        if lo is not None and np.any(lo > hi):
            raise BoundsInverted(f"{label} lower bound exceeds upper bound")

    state_cones = _check_cones("state", con.state_cones, n, x_min, x_max)
    input_cones = _check_cones("input", con.input_cones, m, u_min, u_max)

    has_state_bounds = x_min is not None and bool(
        np.any(np.isfinite(x_min)) or np.any(np.isfinite(x_max))
    )
    has_input_bounds = u_min is not None and bool(
        np.any(np.isfinite(u_min)) or np.any(np.isfinite(u_max))
    )

    return ValidatedProblem(
        dims=dims,
        dynamics=LinearDynamics(A=A, B=B, c=c),
        cost=CostData(Q=Q, R=R, q=q, r=r),
        constraints=ConstraintSet(
            x_min=x_min,
            x_max=x_max,
            u_min=u_min,
            u_max=u_max,
            state_cones=state_cones,
            input_cones=input_cones,
        ),
        has_state_bounds=has_state_bounds,
        has_input_bounds=has_input_bounds,
    )


def refs_to_linear_cost(
    refs: References,
    cost: CostData,
    Pinf: np.ndarray,
    out_q: Optional[np.ndarray] = None,
    out_r: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Convert tracking references into per-stage linear cost terms.

    Stage k < N-1 gets q_k = -Q x_ref_k; the terminal stage uses the
    infinite-horizon value matrix, q_{N-1} = -Pinf x_ref_{N-1}; inputs get
    r_k = -R u_ref_k. The map is linear in the references. Passing ``out_q``
    and ``out_r`` writes in place (receding-horizon drivers reuse the
    problem's own cost buffers); otherwise fresh arrays are returned.
    """
    x_ref = np.asarray(refs.x_ref, dtype=np.float64)
    u_ref = np.asarray(refs.u_ref, dtype=np.float64)
    if x_ref.ndim != 2 or u_ref.ndim != 2 or x_ref.shape[0] != u_ref.shape[0] + 1:
        raise DimensionMismatch("references must be (N, n) states and (N-1, m) inputs")
    if not (np.all(np.isfinite(x_ref)) and np.all(np.isfinite(u_ref))):
        raise NonFiniteEntry("references contain a non-finite entry")
    if out_q is None:
        out_q = np.empty_like(x_ref)
    if out_r is None:
        out_r = np.empty_like(u_ref)
    # Q and Pinf are symmetric, so row-vector products give Q @ x_ref_k rows.
    np.matmul(x_ref, cost.Q, out=out_q)
    np.matmul(x_ref[-1], Pinf, out=out_q[-1])
    np.matmul(u_ref, cost.R, out=out_r)
    np.negative(out_q, out=out_q)
    np.negative(out_r, out=out_r)
    return out_q, out_r


def trajectory_cost(cost: CostData, x: np.ndarray, u: np.ndarray) -> float:
    """Objective value of a trajectory under the quadratic-plus-linear cost.

    Uses the problem's own Q at the terminal stage, which is what the
    reference solvers optimize; the cached solver shapes only the terminal
    value function, not the reported objective.
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    q = cost.q if cost.q is not None else np.zeros_like(x)
    r = cost.r if cost.r is not None else np.zeros_like(u)
    total = 0.0
    for k in range(x.shape[0]):
        total += 0.5 * float(x[k] @ cost.Q @ x[k]) + float(q[k] @ x[k])
    for k in range(u.shape[0]):
        total += 0.5 * float(u[k] @ cost.R @ u[k]) + float(r[k] @ u[k])
    return total
