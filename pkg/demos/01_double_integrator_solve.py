"""Solve a box-constrained double integrator and sanity-check the answer.

The smallest end-to-end story: build a problem, validate it, build the
gain cache once, solve, and compare the objective against the slow
reference solver.
"""

import numpy as np

from tinysocp.oracles import reference_admm
from tinysocp.problem import (
    ConstraintSet,
    CostData,
    LinearDynamics,
    ProblemDefinition,
    ProblemDims,
    Settings,
    Workspace,
    trajectory_cost,
    validate,
)
from tinysocp.riccati import make_cache
from tinysocp.solver import solve


def main():
    dt = 0.1
    problem = ProblemDefinition(
        dims=ProblemDims(n=2, m=1, N=40),
        dynamics=LinearDynamics(
            A=np.array([[1.0, dt], [0.0, 1.0]]),
            B=np.array([[0.5 * dt * dt], [dt]]),
            c=np.zeros(2),
        ),
        cost=CostData(Q=np.diag([10.0, 1.0]), R=np.eye(1) * 0.5),
        constraints=ConstraintSet(u_min=np.array([-0.5]), u_max=np.array([0.5])),
    )
    vp = validate(problem)
    settings = Settings(rho=5.0, abs_pri_tol=1e-6, abs_dua_tol=1e-6, max_iter=5000)
    cache = make_cache(vp, rho=settings.rho)
    ws = Workspace(vp.dims)

    x0 = np.array([1.5, 0.0])
    report = solve(ws, vp, cache, settings, x0)
    print(f"status      : {report.status.name}")
    print(f"iterations  : {report.iterations}")
    print(f"residuals   : pri {report.pri_res:.3e}, dua {report.dua_res:.3e}")
    print(f"peak input  : {np.max(np.abs(report.u)):.4f} (bound 0.5)")

    obj = trajectory_cost(vp.cost, report.x, report.u)
    ref = reference_admm(vp, x0, iters=100000, tol=1e-9, rho=settings.rho)
    obj_ref = trajectory_cost(vp.cost, ref.x, ref.u)
    print(f"objective   : {obj:.6f} (reference {obj_ref:.6f})")

    print("\nfirst knots (pos, vel, thrust):")
    for k in range(5):
        print(f"  k={k}: {report.x[k][0]:+.4f} {report.x[k][1]:+.4f} {report.u[k][0]:+.4f}")


if __name__ == "__main__":
    main()
