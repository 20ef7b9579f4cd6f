"""Independent correctness oracles.

Everything here exists to check the fast paths, never to be fast itself:

* :func:`kkt_solve` solves the equality-constrained QP of one primal update
  by dense factorization of the full stacked KKT system,
* :func:`riccati_linear_reference` evaluates the explicit time-varying
  linear recursion at a constant (Kinf, Pinf), which the cached backward
  pass must reproduce,
* :func:`dare_residual` measures how far a (K, P) pair is from the textbook
  algebraic Riccati fixed point, written in the inverse form rather than
  the iteration's own update form,
* :func:`grid_projection_oracle` brute-forces cone projection over a dense
  radial/angular grid,
* :func:`reference_admm` is a slow, allocation-happy re-implementation of
  the whole iteration with unscaled duals and a full time-varying Riccati
  recursion recomputed every iteration.

These paths share no code with the solver loop beyond the problem types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .problem import ConeSlice, ValidatedProblem, trajectory_cost
from .riccati import SolverCache, augment_costs

__all__ = [
    "SingularKKT",
    "kkt_solve",
    "riccati_linear_reference",
    "dare_residual",
    "grid_projection_oracle",
    "ReferenceSolution",
    "reference_admm",
]


class SingularKKT(RuntimeError):
    """The stacked KKT matrix failed to factorize; the problem is invalid."""


def kkt_solve(
    problem: ValidatedProblem,
    cache: SolverCache,
    qt: np.ndarray,
    rt: np.ndarray,
    x0: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Dense ground truth for one primal update.

    Minimizes the penalty-augmented quadratic (interior state Hessians
    Q + rho*I, input Hessians R + rho*I, terminal Hessian Pinf) with the
    given linear terms, subject to x_0 = x0 and the affine dynamics,
    by factorizing the full KKT system over stacked variables.
    """
    n, m, N = problem.dims.n, problem.dims.m, problem.dims.N
    A, B, c = problem.dynamics.A, problem.dynamics.B, problem.dynamics.c
    Qt, Rt = augment_costs(problem.cost, cache.rho)
    nx = N * n
    nu = (N - 1) * m
    nv = nx + nu
    nc = N * n

    H = np.zeros((nv, nv))
    for k in range(N - 1):
        H[k * n : (k + 1) * n, k * n : (k + 1) * n] = Qt
    H[(N - 1) * n : N * n, (N - 1) * n : N * n] = cache.Pinf
    for k in range(N - 1):
        r0 = nx + k * m
        H[r0 : r0 + m, r0 : r0 + m] = Rt

    f = np.concatenate([np.asarray(qt).ravel(), np.asarray(rt).ravel()])

    E = np.zeros((nc, nv))
    b = np.zeros(nc)
    E[0:n, 0:n] = np.eye(n)
    b[0:n] = x0
    row = n
    for k in range(N - 1):
        E[row : row + n, (k + 1) * n : (k + 2) * n] = np.eye(n)
        E[row : row + n, k * n : (k + 1) * n] = -A
        E[row : row + n, nx + k * m : nx + (k + 1) * m] = -B
        b[row : row + n] = c
        row += n

    kkt = np.zeros((nv + nc, nv + nc))
    kkt[:nv, :nv] = H
    kkt[:nv, nv:] = E.T
    kkt[nv:, :nv] = E
    rhs = np.concatenate([-f, b])
    try:
        sol = scipy.linalg.solve(kkt, rhs, assume_a="sym")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularKKT(f"KKT factorization failed: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise SingularKKT("KKT solve produced non-finite entries")
    x = sol[:nx].reshape(N, n)
    u = sol[nx:nv].reshape(N - 1, m)
    return x, u


def riccati_linear_reference(
    dynamics,
    Kinf: np.ndarray,
    Pinf: np.ndarray,
    Rt: np.ndarray,
    qt: np.ndarray,
    rt: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Explicit linear recursion evaluated at a frozen (Kinf, Pinf).

    d_k = (Rt + B'Pinf B)^-1 (B'p_{k+1} + rt_k + B'Pinf c)
    p_k = qt_k + (A - B Kinf)'(p_{k+1} - Pinf B d_k + Pinf c)
          + Kinf'(Rt d_k - rt_k)

    The cached backward pass must match this to tight tolerance; the
    algebraic rearrangement into the cached form is exactly what it claims
    to be only if these agree.
    """
    A, B, c = dynamics.A, dynamics.B, dynamics.c
    N = qt.shape[0]
    m = rt.shape[1]
    n = qt.shape[1]
    S = Rt + B.T @ Pinf @ B
    Acl = A - B @ Kinf
    d = np.zeros((N - 1, m))
    p = np.zeros((N, n))
    p[N - 1] = qt[N - 1]
    for k in range(N - 2, -1, -1):
        d[k] = np.linalg.solve(S, B.T @ p[k + 1] + rt[k] + B.T @ (Pinf @ c))
        p[k] = (
            qt[k]
            + Acl.T @ (p[k + 1] - Pinf @ (B @ d[k]) + Pinf @ c)
            + Kinf.T @ (Rt @ d[k] - rt[k])
        )
    return d, p


def dare_residual(
    dynamics, Qt: np.ndarray, Rt: np.ndarray, K: np.ndarray, P: np.ndarray
) -> float:
    """Inf-norm residual of the algebraic Riccati fixed point at (K, P).

    Uses the inverse ("textbook") form
        P = Qt + A'PA - A'PB (Rt + B'PB)^-1 B'PA
    plus the optimal-gain identity, deliberately not the Joseph-form update
    the iteration itself applies.
    """
    A, B = dynamics.A, dynamics.B
    BtP = B.T @ P
    S = Rt + BtP @ B
    gain = np.linalg.solve(S, BtP @ A)
    P_fix = Qt + A.T @ P @ A - A.T @ P @ B @ gain
    res_p = float(np.max(np.abs(P - P_fix)))
    res_k = float(np.max(np.abs(K - gain))) if K.size else 0.0
    return max(res_p, res_k)


def grid_projection_oracle(z: np.ndarray, grid_resolution: int = 400) -> np.ndarray:
    """Nearest cone point among a dense grid of candidates.

    2-D: the feasible wedge |v| <= a is gridded directly in polar form,
    angle from the axis in [-pi/4, pi/4] by radius in [0, rmax].

    3-D: the projection of a point onto a closed convex cone is the point
    itself when feasible and a boundary point otherwise, so gridding the
    boundary surface (azimuth by height, plus the point itself when
    feasible) covers every possible optimum; a full 3-axis volume grid at
    this resolution would be both wasteful and no more correct.

    rmax = norm(z) suffices because projections never move farther from
    the origin (the cone contains 0 and projection is nonexpansive).
    """
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size not in (2, 3):
        raise ValueError("grid oracle supports 2- and 3-dimensional cones only")
    res = int(grid_resolution)
    vnorm = float(np.linalg.norm(z[:-1]))
    feasible = vnorm <= float(z[-1])
    rmax = float(np.linalg.norm(z))
    if z.size == 2:
        theta = np.linspace(-0.25 * math.pi, 0.25 * math.pi, res)
        radius = np.linspace(0.0, rmax, res)
        pts = np.empty((res * res, 2))
        pts[:, 0] = np.outer(radius, np.sin(theta)).ravel()
        pts[:, 1] = np.outer(radius, np.cos(theta)).ravel()
    else:
        phi = np.linspace(0.0, 2.0 * math.pi, res, endpoint=False)
        height = np.linspace(0.0, rmax, res)
        pts = np.empty((res * res, 3))
        pts[:, 0] = np.outer(height, np.cos(phi)).ravel()
        pts[:, 1] = np.outer(height, np.sin(phi)).ravel()
        pts[:, 2] = np.repeat(height, res)
    if feasible:
        pts = np.vstack([pts, z])
    dist = np.sum((pts - z) ** 2, axis=1)
    return pts[int(np.argmin(dist))].copy()


@dataclass(frozen=True)
class ReferenceSolution:
    x: np.ndarray
    u: np.ndarray
    objective: float
    iterations: int
    pri_res: float
    dua_res: float


def _project_stage_ref(
    vec: np.ndarray,
    lo: Optional[np.ndarray],
    hi: Optional[np.ndarray],
    cones: Sequence[ConeSlice],
) -> np.ndarray:
    """Reference projection: numpy clip plus the textbook cone cases."""
    out = vec.copy()
    if lo is not None:
        out = np.clip(out, lo, hi)
    for cone in cones:
        seg = out[cone.start : cone.start + cone.len]
        head = seg[:-1]
        apex = float(seg[-1])
        nv = float(np.linalg.norm(head))
        if nv <= apex:
            continue
        if nv <= -apex:
            seg[:] = 0.0
        else:
            s = 0.5 * (1.0 + apex / nv)
            seg[:-1] = s * head
            seg[-1] = s * nv
    return out


def reference_admm(
    problem: ValidatedProblem,
    x0: np.ndarray,
    iters: int = 100000,
    tol: float = 1e-10,
    rho: float = 1.0,
) -> ReferenceSolution:
    """Slow ground-truth run of the full iteration, no caching anywhere.

    Uses unscaled duals (lambda, mu) and recomputes the complete
    time-varying Riccati recursion, gains included, every single iteration
    from the terminal condition P_N = Q + rho*I. Converged output therefore
    also certifies that freezing the recursion at its infinite-horizon
    fixed point loses nothing on horizons long enough for the recursion to
    settle. Stops early once both residuals drop below ``tol``.
    """
    n, m, N = problem.dims.n, problem.dims.m, problem.dims.N
    A, B, c = problem.dynamics.A, problem.dynamics.B, problem.dynamics.c
    cost = problem.cost
    con = problem.constraints
    Qt = cost.Q + rho * np.eye(n)
    Rt = cost.R + rho * np.eye(m)

    x = np.zeros((N, n))
    u = np.zeros((N - 1, m))
    zz = np.zeros((N, n))
    ww = np.zeros((N - 1, m))
    lam = np.zeros((N, n))
    mu = np.zeros((N - 1, m))
    x[0] = np.asarray(x0, dtype=np.float64)

    pri = math.inf
    dua = math.inf
    done = 0
    for it in range(1, iters + 1):
        qt = cost.q + lam - rho * zz
        rt = cost.r + mu - rho * ww

        P = [None] * N
        p = [None] * N
        K = [None] * (N - 1)
        d = [None] * (N - 1)
        P[N - 1] = Qt
        p[N - 1] = qt[N - 1]
        for k in range(N - 2, -1, -1):
            S = Rt + B.T @ P[k + 1] @ B
            K[k] = np.linalg.solve(S, B.T @ P[k + 1] @ A)
            d[k] = np.linalg.solve(S, B.T @ p[k + 1] + rt[k] + B.T @ (P[k + 1] @ c))
            Acl = A - B @ K[k]
            P[k] = Qt + K[k].T @ Rt @ K[k] + Acl.T @ P[k + 1] @ Acl
            p[k] = (
                qt[k]
                + Acl.T @ (p[k + 1] - P[k + 1] @ (B @ d[k]) + P[k + 1] @ c)
                + K[k].T @ (Rt @ d[k] - rt[k])
            )

        for k in range(N - 1):
            u[k] = -K[k] @ x[k] - d[k]
            x[k + 1] = A @ x[k] + B @ u[k] + c

        z_old = zz
        w_old = ww
        zz = np.empty_like(z_old)
        ww = np.empty_like(w_old)
        for k in range(N):
            zz[k] = _project_stage_ref(x[k] + lam[k] / rho, con.x_min, con.x_max, con.state_cones)
        for k in range(N - 1):
            ww[k] = _project_stage_ref(u[k] + mu[k] / rho, con.u_min, con.u_max, con.input_cones)
        lam = lam + rho * (x - zz)
        mu = mu + rho * (u - ww)

        pri = max(float(np.max(np.abs(x - zz))), float(np.max(np.abs(u - ww))))
        dua = rho * max(float(np.max(np.abs(zz - z_old))), float(np.max(np.abs(ww - w_old))))
        done = it
        if pri < tol and dua < tol:
            break

    return ReferenceSolution(
        x=x.copy(),
        u=u.copy(),
        objective=trajectory_cost(cost, x, u),
        iterations=done,
        pri_res=pri,
        dua_res=dua,
    )
