"""Regenerate the shared problem files from the native library.

The files are committed; run this only when the set changes. Using the
native serializer keeps the frontend honest: its own emitter must
produce files the native loader treats identically, and these are the
ground truth it is tested against.
"""

from pathlib import Path

import numpy as np

from tinysocp.benchmarks import make_rocket_landing, make_safety_filter, make_spiral_landing
from tinysocp.problem import (
    ConstraintSet,
    CostData,
    LinearDynamics,
    ProblemDefinition,
    ProblemDims,
    Settings,
)
from tinysocp.problemfile import save_problem

HERE = Path(__file__).parent


def di_box():
    dt = 0.1
    problem = ProblemDefinition(
        dims=ProblemDims(n=2, m=1, N=25),
        dynamics=LinearDynamics(
            A=np.array([[1.0, dt], [0.0, 1.0]]),
            B=np.array([[0.5 * dt * dt], [dt]]),
            c=np.zeros(2),
        ),
        cost=CostData(Q=np.diag([10.0, 1.0]), R=0.5 * np.eye(1)),
        constraints=ConstraintSet(u_min=np.array([-0.5]), u_max=np.array([0.5])),
    )
    settings = Settings(rho=5.0, abs_pri_tol=1e-6, abs_dua_tol=1e-6, max_iter=4000)
    return problem, settings


def tracking_linear():
    """Explicit linear cost terms plus a one-sided state bound."""
    dt = 0.05
    N = 12
    q = np.zeros((N, 3))
    q[:, 0] = -2.0
    r = np.full((N - 1, 2), 0.25)
    problem = ProblemDefinition(
        dims=ProblemDims(n=3, m=2, N=N),
        dynamics=LinearDynamics(
            A=np.array([[1.0, dt, 0.0], [0.0, 1.0, dt], [0.0, 0.0, 0.9]]),
            B=np.array([[0.0, 0.0], [dt, 0.0], [0.0, dt]]),
            c=np.array([0.0, 0.0, 0.01]),
        ),
        cost=CostData(Q=np.diag([4.0, 1.0, 1.0]), R=0.2 * np.eye(2), q=q, r=r),
        constraints=ConstraintSet(
            x_min=np.array([-1.5, -np.inf, -np.inf]),
        ),
    )
    settings = Settings(rho=2.0, abs_pri_tol=1e-7, abs_dua_tol=1e-7, max_iter=6000)
    return problem, settings


def main():
    entries = {
        "di_box.json": di_box(),
        "rocket_cone.json": (
            make_rocket_landing().problem,
            make_rocket_landing().settings,
        ),
        "filter_axes.json": (
            make_safety_filter(a=2).problem,
            make_safety_filter(a=2).settings,
        ),
        "spiral_cone.json": (
            make_spiral_landing().problem,
            make_spiral_landing().settings,
        ),
        "tracking_linear.json": tracking_linear(),
    }
    for name, (problem, settings) in entries.items():
        save_problem(HERE / name, problem, settings)
        print(f"wrote {name}")


if __name__ == "__main__":
    main()
