"""Online solve loop: operator-splitting iteration over a cached LQR policy.

Each iteration runs five steps in a fixed order:

1. update_linear_costs: fold penalty terms into the linear costs,
2. backward_pass: cached recursion producing feedforwards d and costates p,
3. forward_pass: affine policy rollout, so dynamics hold exactly,
4. slack_update: project shifted iterates onto boxes and cones,
5. dual_update: scaled-dual ascent on the consensus gap.

The loop performs no array allocation, no factorization, and no division
outside the cone projection; every arithmetic step is a fixed-order kernel
so the generated standalone sources reproduce the iterates bit for bit.
Duals are stored scaled (y = lambda / rho), which is what makes the online
path division-free; multiply by rho to recover multipliers.
"""

from __future__ import annotations

import numpy as np

from .kernels import matvec, matvec_t
from .problem import (
    CostData,
    DimensionMismatch,
    LinearDynamics,
    NonFiniteEntry,
    Settings,
    SolveReport,
    Status,
    ValidatedProblem,
    Workspace,
)
from .projections import box_inplace, soc_inplace
from .riccati import SolverCache

__all__ = [
    "update_linear_costs",
    "backward_pass",
    "forward_pass",
    "slack_update",
    "dual_update",
    "compute_residuals",
    "iterate",
    "solve",
    "warm_start_shift",
]


def update_linear_costs(ws: Workspace, cost: CostData, rho: float) -> None:
    """qt_k = q_k + rho*(y_k - z_k) and rt_k = r_k + rho*(g_k - w_k)."""
    np.subtract(ws.y, ws.z, out=ws.qt)
    np.multiply(ws.qt, rho, out=ws.qt)
    np.add(ws.qt, cost.q, out=ws.qt)
    np.subtract(ws.g, ws.w, out=ws.rt)
    np.multiply(ws.rt, rho, out=ws.rt)
    np.add(ws.rt, cost.r, out=ws.rt)


def backward_pass(ws: Workspace, cache: SolverCache, dynamics: LinearDynamics) -> None:
    """Seed p_{N-1} = qt_{N-1}, then walk the cached recursion backward.

    d_k = C1 (B'p_{k+1} + rt_k + C3)
    p_k = qt_k + C2 p_{k+1} - Kinf' rt_k + C4

    Matrix-vector products only; no factorizations, no divisions.
    """
    B = dynamics.B
    N = ws.dims.N
    np.copyto(ws.p[N - 1], ws.qt[N - 1])
    for k in range(N - 2, -1, -1):
        matvec_t(B, ws.p[k + 1], out=ws.scr_m, scr=ws.scr_m2)
        np.add(ws.scr_m, ws.rt[k], out=ws.scr_m)
        np.add(ws.scr_m, cache.C3, out=ws.scr_m)
        matvec(cache.C1, ws.scr_m, out=ws.d[k], scr=ws.scr_m2)
        matvec(cache.C2, ws.p[k + 1], out=ws.p[k], scr=ws.scr_n)
        matvec_t(cache.Kinf, ws.rt[k], out=ws.scr_n, scr=ws.scr_n2)
        np.subtract(ws.p[k], ws.scr_n, out=ws.p[k])
        np.add(ws.p[k], ws.qt[k], out=ws.p[k])
        np.add(ws.p[k], cache.C4, out=ws.p[k])


def forward_pass(
    ws: Workspace, cache: SolverCache, dynamics: LinearDynamics, x0: np.ndarray
) -> None:
    """Roll the affine policy u_k = -Kinf x_k - d_k through the dynamics.

    Dynamics hold exactly at every iteration by construction; only
    constraint feasibility is asymptotic.
    """
    A, B, c = dynamics.A, dynamics.B, dynamics.c
    N = ws.dims.N
    np.copyto(ws.x[0], x0)
    for k in range(N - 1):
        matvec(cache.Kinf, ws.x[k], out=ws.u[k], scr=ws.scr_m)
        np.add(ws.u[k], ws.d[k], out=ws.u[k])
        np.negative(ws.u[k], out=ws.u[k])
        matvec(A, ws.x[k], out=ws.x[k + 1], scr=ws.scr_n)
        matvec(B, ws.u[k], out=ws.scr_n, scr=ws.scr_n2)
        np.add(ws.x[k + 1], ws.scr_n, out=ws.x[k + 1])
        np.add(ws.x[k + 1], c, out=ws.x[k + 1])


def slack_update(ws: Workspace, problem: ValidatedProblem, settings: Settings) -> None:
    """Save previous slacks, then project x + y and u + g onto the sets."""
    con = problem.constraints
    N = ws.dims.N
    np.copyto(ws.z_prev, ws.z)
    np.copyto(ws.w_prev, ws.w)
    np.add(ws.x, ws.y, out=ws.z)
    np.add(ws.u, ws.g, out=ws.w)
    if settings.en_state_bound and problem.has_state_bounds:
        box_inplace(ws.z, con.x_min, con.x_max)
    if settings.en_state_soc:
        for cone in con.state_cones:
            for k in range(N):
                soc_inplace(ws.z[k], cone.start, cone.len)
    if settings.en_input_bound and problem.has_input_bounds:
        box_inplace(ws.w, con.u_min, con.u_max)
    if settings.en_input_soc:
        for cone in con.input_cones:
            for k in range(N - 1):
                soc_inplace(ws.w[k], cone.start, cone.len)


def dual_update(ws: Workspace) -> None:
    """Scaled ascent: y += x - z, g += u - w. Division-free."""
    np.subtract(ws.x, ws.z, out=ws.scr_x)
    np.add(ws.y, ws.scr_x, out=ws.y)
    np.subtract(ws.u, ws.w, out=ws.scr_u)
    np.add(ws.g, ws.scr_u, out=ws.g)


def compute_residuals(ws: Workspace, rho: float) -> tuple:
    """Infinity-norm residuals of the current iterate.

    pri = max over stages of max(|x - z|, |u - w|) entrywise;
    dua = rho * max over stages of the slack step |z - z_prev|, |w - w_prev|.
    Pure read of the iterate state (scratch aside), so checking never
    perturbs the iteration.
    """
    np.subtract(ws.x, ws.z, out=ws.scr_x)
    np.abs(ws.scr_x, out=ws.scr_x)
    pri = float(ws.scr_x.max())
    np.subtract(ws.u, ws.w, out=ws.scr_u)
    np.abs(ws.scr_u, out=ws.scr_u)
    pri = max(pri, float(ws.scr_u.max()))
    np.subtract(ws.z, ws.z_prev, out=ws.scr_x)
    np.abs(ws.scr_x, out=ws.scr_x)
    dua = float(ws.scr_x.max())
    np.subtract(ws.w, ws.w_prev, out=ws.scr_u)
    np.abs(ws.scr_u, out=ws.scr_u)
    dua = max(dua, float(ws.scr_u.max()))
    return pri, rho * dua


def iterate(
    ws: Workspace,
    problem: ValidatedProblem,
    cache: SolverCache,
    settings: Settings,
    x0: np.ndarray,
) -> None:
    """Run exactly one full iteration (the five steps, no residual check)."""
    update_linear_costs(ws, problem.cost, settings.rho)
    backward_pass(ws, cache, problem.dynamics)
    forward_pass(ws, cache, problem.dynamics, x0)
    slack_update(ws, problem, settings)
    dual_update(ws)


def solve(
    ws: Workspace,
    problem: ValidatedProblem,
    cache: SolverCache,
    settings: Settings,
    x0: np.ndarray,
) -> SolveReport:
    """Iterate to tolerance or budget, reporting final state.

    Residuals are evaluated every ``check_termination`` iterations
    (0 disables checks entirely, so the loop always runs to max_iter).
    The workspace keeps all iterate variables on exit; the next solve on
    the same workspace is warm-started from them verbatim. The report's
    trajectories live in workspace-owned buffers valid until the next call.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (ws.dims.n,):
        raise DimensionMismatch(f"x0 must have shape ({ws.dims.n},), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise NonFiniteEntry("x0 contains a non-finite entry")
    if cache.rho != settings.rho:
        raise ValueError(
            f"cache was built for rho={cache.rho:g} but settings ask for rho={settings.rho:g}"
        )
    ws.status = Status.UNSOLVED
    check = settings.check_termination
    solved = False
    for it in range(1, settings.max_iter + 1):
        iterate(ws, problem, cache, settings, x0)
        ws.iterations = it
        if check > 0 and it % check == 0:
            pri, dua = compute_residuals(ws, settings.rho)
            ws.pri_res = pri
            ws.dua_res = dua
            if pri < settings.abs_pri_tol and dua < settings.abs_dua_tol:
                solved = True
                break
    if solved:
        ws.status = Status.SOLVED
    else:
        pri, dua = compute_residuals(ws, settings.rho)
        ws.pri_res = pri
        ws.dua_res = dua
        ws.status = Status.MAX_ITERS
    np.copyto(ws.report_x, ws.x)
    np.copyto(ws.report_u, ws.u)
    return SolveReport(
        status=ws.status,
        iterations=ws.iterations,
        pri_res=ws.pri_res,
        dua_res=ws.dua_res,
        x=ws.report_x,
        u=ws.report_u,
    )


def warm_start_shift(ws: Workspace) -> None:
    """Shift iterates one stage earlier, duplicating the final stage.

    Optional helper for receding-horizon use; plain persistence (no shift)
    is the default behavior of consecutive solves.
    """
    N = ws.dims.N
    for k in range(N - 1):
        np.copyto(ws.x[k], ws.x[k + 1])
        np.copyto(ws.z[k], ws.z[k + 1])
        np.copyto(ws.y[k], ws.y[k + 1])
    for k in range(N - 2):
        np.copyto(ws.u[k], ws.u[k + 1])
        np.copyto(ws.w[k], ws.w[k + 1])
        np.copyto(ws.g[k], ws.g[k + 1])
