"""Offline stage: penalty-augmented costs, infinite-horizon gain, cached matrices.

The online solver never factorizes anything. Everything that depends only on
(A, B, c, Q, R, rho) is computed here once:

* augmented costs Qt = Q + rho*I and Rt = R + rho*I,
* the infinite-horizon LQR pair (Kinf, Pinf) for the augmented costs,
* four cached matrices that turn the per-iteration backward pass into pure
  matrix-vector work: C1 = (Rt + B'Pinf B)^-1, C2 = (A - B Kinf)',
  C3 = B'Pinf c, C4 = C2 Pinf c.

The cache depends on costs only through the augmented pair, so building it
for (rho, Q, R) and for (0, Q + rho*I, R + rho*I) gives identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from .problem import CostData, LinearDynamics, ValidatedProblem

__all__ = [
    "RiccatiError",
    "NoConvergence",
    "FactorizationFailure",
    "SolverCache",
    "augment_costs",
    "compute_infinite_horizon",
    "build_cache",
    "make_cache",
]

DEFAULT_RICCATI_TOL = 1e-10
DEFAULT_RICCATI_MAX_ITER = 10000


class RiccatiError(RuntimeError):
    """Offline Riccati stage failed."""


class NoConvergence(RiccatiError):
    """Fixed-point iteration did not reach the requested tolerance."""


class FactorizationFailure(RiccatiError):
    """A matrix that must be positive definite failed to factorize."""


@dataclass(frozen=True)
class SolverCache:
    """Precomputed matrices consumed by the online solve loop.

    ``rho`` records the penalty the cache was built for; a solve refuses to
    run if its settings disagree.
    """

    rho: float
    Kinf: np.ndarray
    Pinf: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    C3: np.ndarray
    C4: np.ndarray


def augment_costs(cost: CostData, rho: float) -> Tuple[np.ndarray, np.ndarray]:
    """Return (Q + rho*I, R + rho*I), leaving the inputs untouched."""
    if not (rho > 0.0 and np.isfinite(rho)):
        raise ValueError("rho must be a positive finite number")
    n = cost.Q.shape[0]
    m = cost.R.shape[0]
    return cost.Q + rho * np.eye(n), cost.R + rho * np.eye(m)


def _stationarity_gap(
    A: np.ndarray, B: np.ndarray, Qt: np.ndarray, Rt: np.ndarray, K: np.ndarray, P: np.ndarray
) -> float:
    """Largest violation of the two fixed-point identities at (K, P)."""
    S = Rt + B.T @ P @ B
    K_chk = np.linalg.solve(S, B.T @ P @ A)
    Acl = A - B @ K
    P_chk = Qt + K.T @ Rt @ K + Acl.T @ P @ Acl
    gap_k = float(np.max(np.abs(K - K_chk))) if K.size else 0.0
    gap_p = float(np.max(np.abs(P - P_chk)))
    return max(gap_k, gap_p)


def compute_infinite_horizon(
    dynamics: LinearDynamics,
    Qt: np.ndarray,
    Rt: np.ndarray,
    tol: float = DEFAULT_RICCATI_TOL,
    max_iter: int = DEFAULT_RICCATI_MAX_ITER,
) -> Tuple[np.ndarray, np.ndarray]:
    """Iterate the backward recursion to its fixed point (Kinf, Pinf).

    Starting from P = Qt, repeat
        K = (Rt + B'PB)^-1 B'PA
        P = Qt + K'Rt K + (A-BK)' P (A-BK)
    until the gain stops moving (inf-norm step below ``tol``) and both
    fixed-point identities hold to 10*tol. The second condition guards
    against a stalled gain masquerading as convergence, e.g. when B = 0
    makes K identically zero while P is still drifting.
    """
    A, B = dynamics.A, dynamics.B
    n, m = B.shape
    P = Qt.copy()
    K_prev = np.zeros((m, n))
    # divergence surfaces as a NoConvergence below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            S = Rt + B.T @ P @ B
            try:
                K = np.linalg.solve(S, B.T @ P @ A)
            except np.linalg.LinAlgError as exc:
                raise FactorizationFailure(f"input-Hessian solve failed: {exc}") from None
            Acl = A - B @ K
            P_next = Qt + K.T @ Rt @ K + Acl.T @ P @ Acl
            if not np.all(np.isfinite(P_next)):
                raise NoConvergence("recursion diverged; is (A, B) stabilizable?")
            step = float(np.max(np.abs(K - K_prev)))
            if step < tol and _stationarity_gap(A, B, Qt, Rt, K, P_next) < 10.0 * tol:
                return K, P_next
            K_prev, P = K, P_next
    raise NoConvergence(
        f"no fixed point within {max_iter} iterations at tolerance {tol:g}"
    )


def build_cache(
    dynamics: LinearDynamics,
    Kinf: np.ndarray,
    Pinf: np.ndarray,
    Rt: np.ndarray,
    rho: float,
) -> SolverCache:
    """Assemble the cached matrices from an infinite-horizon pair."""
    A, B, c = dynamics.A, dynamics.B, dynamics.c
    S = Rt + B.T @ Pinf @ B
    try:
        chol = scipy.linalg.cho_factor(S, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationFailure(f"Rt + B'Pinf B is not positive definite: {exc}") from None
    C1 = scipy.linalg.cho_solve(chol, np.eye(B.shape[1]))
    C1 = np.ascontiguousarray(0.5 * (C1 + C1.T))
    C2 = np.ascontiguousarray((A - B @ Kinf).T)
    Pc = Pinf @ c
    C3 = B.T @ Pc
    C4 = C2 @ Pc
    return SolverCache(
        rho=float(rho),
        Kinf=np.ascontiguousarray(Kinf),
        Pinf=np.ascontiguousarray(Pinf),
        C1=C1,
        C2=C2,
        C3=np.ascontiguousarray(C3),
        C4=np.ascontiguousarray(C4),
    )


def make_cache(
    problem: ValidatedProblem,
    rho: float,
    tol: float = DEFAULT_RICCATI_TOL,
    max_iter: int = DEFAULT_RICCATI_MAX_ITER,
) -> SolverCache:
    """One-call offline pipeline: augment costs, find the fixed point, cache."""
    Qt, Rt = augment_costs(problem.cost, rho)
    Kinf, Pinf = compute_infinite_horizon(problem.dynamics, Qt, Rt, tol=tol, max_iter=max_iter)
    return build_cache(problem.dynamics, Kinf, Pinf, Rt, rho)
