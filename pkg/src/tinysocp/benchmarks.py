"""Closed-loop benchmark scenarios and the receding-horizon harness.

Three scenario families, all desk-scale:

* safety filter: stacked double integrators where the solver minimally
  corrects a proportional-derivative policy tracking a sinusoid that leaves
  the safe box,
* rocket landing: 3-D point mass under gravity with a thrust-direction
  cone, flown down a straight-line descent schedule,
* spiral landing: same point mass with a 45-degree position cone and a
  cylindrical (non-shrinking) helical reference, so the feasible spiral
  emerges from the constraint rather than the reference.

The harness solves, applies the first input to the true dynamics (equal to
the model by design), accumulates positive-part constraint violations of
the applied quantities, and warm-starts the next step from workspace
persistence. Iteration budgets stand in for the wall-clock deadlines that
embedded deployments would use.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .problem import (
    ConeSlice,
    ConstraintSet,
    CostData,
    LinearDynamics,
    ProblemDefinition,
    ProblemDims,
    References,
    Settings,
    Status,
    ValidatedProblem,
    Workspace,
    refs_to_linear_cost,
    validate,
)
from .riccati import make_cache
from .solver import solve

__all__ = [
    "SafetyFilterProblem",
    "RocketLandingProblem",
    "SpiralLandingProblem",
    "ClosedLoopMetrics",
    "RunResult",
    "make_safety_filter",
    "make_rocket_landing",
    "make_spiral_landing",
    "run_closed_loop",
    "rollout_nominal",
    "trajectory_header",
    "format_record",
    "measure_per_iteration_time",
]

GRAVITY = 9.81


@dataclass(frozen=True)
class ClosedLoopMetrics:
    """Aggregates of one closed-loop run; both fields are nonnegative.

    total_violation sums, over steps, the positive parts of box excess and
    cone excess (norm(v) - a when positive) of the applied inputs and the
    states they produce. landing_error is the Euclidean distance between
    the final state and the goal (0.0 when the scenario has no goal).
    """

    total_violation: float
    landing_error: float


@dataclass
class RunResult:
    metrics: ClosedLoopMetrics
    states: np.ndarray
    inputs: np.ndarray
    table: np.ndarray
    header: str
    statuses: List[Status]
    iterations: np.ndarray
    input_cone_excess: np.ndarray
    state_cone_excess: np.ndarray
    box_excess: np.ndarray


class _Sinusoid:
    """Per-axis sinusoid with PD tracking and exact acceleration feedforward."""

    def __init__(self, axes: int, amplitude: float, omega: float, kp: float, kd: float):
        self.axes = axes
        self.amplitude = amplitude
        self.omega = omega
        self.kp = kp
        self.kd = kd

    def reference(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = math.sin(self.omega * t)
        co = math.cos(self.omega * t)
        pos = np.full(self.axes, self.amplitude * s)
        vel = np.full(self.axes, self.amplitude * self.omega * co)
        acc = np.full(self.axes, -self.amplitude * self.omega * self.omega * s)
        return pos, vel, acc

    def command(self, t: float, state: np.ndarray) -> np.ndarray:
        pos_ref, vel_ref, acc_ff = self.reference(t)
        pos = state[0::2]
        vel = state[1::2]
        return acc_ff + self.kp * (pos_ref - pos) + self.kd * (vel_ref - vel)


@dataclass
class SafetyFilterProblem:
    """Stacked double integrators with a position box; n = 2a, m = a."""

    axes: int
    dt: float
    N: int
    problem: ProblemDefinition
    settings: Settings
    x0: np.ndarray
    nominal: _Sinusoid
    pos_limit: float
    goal: Optional[np.ndarray] = None
    name: str = "safety-filter"

    def fill_references(
        self, step: int, state: np.ndarray, x_ref: np.ndarray, u_ref: np.ndarray
    ) -> None:
        """Roll the nominal policy forward from the current state.

        The rollout is dynamics-consistent, so whenever it stays inside the
        constraints it is the exact optimum and the filter passes the
        nominal command through untouched.
        """
        A = self.problem.dynamics.A
        B = self.problem.dynamics.B
        x_ref[0] = state
        for k in range(self.N - 1):
            t = (step + k) * self.dt
            u_ref[k] = self.nominal.command(t, x_ref[k])
            x_ref[k + 1] = A @ x_ref[k] + B @ u_ref[k]


@dataclass
class RocketLandingProblem:
    """3-D point mass with gravity drift and a thrust-direction cone."""

    dt: float
    N: int
    problem: ProblemDefinition
    settings: Settings
    x0: np.ndarray
    goal: np.ndarray
    land_time: float
    max_thrust: float
    name: str = "rocket"

    def fill_references(
        self, step: int, state: np.ndarray, x_ref: np.ndarray, u_ref: np.ndarray
    ) -> None:
        """Straight-line descent: positions shrink linearly to the goal."""
        p0 = self.x0[:3]
        v_des = -p0 / self.land_time
        for k in range(self.N):
            t = (step + k) * self.dt
            frac = max(0.0, 1.0 - t / self.land_time)
            x_ref[k, :3] = p0 * frac
            x_ref[k, 3:] = v_des if t < self.land_time else 0.0
        for k in range(self.N - 1):
            u_ref[k] = (0.0, 0.0, GRAVITY)


@dataclass
class SpiralLandingProblem:
    """Point mass inside a 45-degree position cone, fed a cylinder reference."""

    dt: float
    N: int
    problem: ProblemDefinition
    settings: Settings
    x0: np.ndarray
    goal: np.ndarray
    radius: float
    omega: float
    alt0: float
    descent_rate: float
    name: str = "spiral"

    def fill_references(
        self, step: int, state: np.ndarray, x_ref: np.ndarray, u_ref: np.ndarray
    ) -> None:
        """Cylinder of constant radius descending to altitude zero.

        Deliberately ignores the cone while descending: the reference stays
        at full radius all the way down, and only the constraint produces
        the spiral. After touchdown time the reference parks at the origin.
        """
        r = self.radius
        w = self.omega
        land = self.alt0 / self.descent_rate
        for k in range(self.N):
            t = (step + k) * self.dt
            if t < land:
                x_ref[k, 0] = r * math.cos(w * t)
                x_ref[k, 1] = r * math.sin(w * t)
                x_ref[k, 2] = self.alt0 - self.descent_rate * t
                x_ref[k, 3] = -r * w * math.sin(w * t)
                x_ref[k, 4] = r * w * math.cos(w * t)
                x_ref[k, 5] = -self.descent_rate
            else:
                x_ref[k] = 0.0
        for k in range(self.N - 1):
            t = (step + k) * self.dt
            if t < land:
                u_ref[k, 0] = -r * w * w * math.cos(w * t)
                u_ref[k, 1] = -r * w * w * math.sin(w * t)
            else:
                u_ref[k, 0] = 0.0
                u_ref[k, 1] = 0.0
            u_ref[k, 2] = GRAVITY


def _double_integrator_3d(dt: float) -> LinearDynamics:
    """Exactly integrated point mass: positions then velocities, gravity in c."""
    A = np.eye(6)
    A[0, 3] = A[1, 4] = A[2, 5] = dt
    B = np.zeros((6, 3))
    B[0, 0] = B[1, 1] = B[2, 2] = 0.5 * dt * dt
    B[3, 0] = B[4, 1] = B[5, 2] = dt
    c = np.array([0.0, 0.0, -GRAVITY * 0.5 * dt * dt, 0.0, 0.0, -GRAVITY * dt])
    return LinearDynamics(A=A, B=B, c=c)


def make_safety_filter(
    a: int = 1,
    N: int = 15,
    dt: float = 0.02,
    pos_limit: float = 0.6,
    amplitude: float = 1.2,
    period: float = 4.0,
    u_limit: float = 12.0,
    seed: Optional[int] = None,
) -> SafetyFilterProblem:
    """Safety-filter scenario: a stacked double integrators per axis.

    The nominal PD policy tracks a sinusoid of the given amplitude; with
    exact feedforward it tracks it essentially perfectly, which is the
    point: unfiltered, the closed loop leaves the box. The filter is a
    minimum-intervention problem: light state weights plus an input
    deviation penalty against the nominal rollout, so whenever the rollout
    stays inside the box it is the exact optimum and passes through.
    """
    if a < 1:
        raise ValueError("need at least one axis")
    n, m = 2 * a, a
    Aa = np.zeros((n, n))
    Ba = np.zeros((n, m))
    for i in range(a):
        Aa[2 * i, 2 * i] = 1.0
        Aa[2 * i, 2 * i + 1] = dt
        Aa[2 * i + 1, 2 * i + 1] = 1.0
        Ba[2 * i, i] = 0.5 * dt * dt
        Ba[2 * i + 1, i] = dt
    # Light weights: corrections should be cheap, the box does the work.
    Q = np.diag(np.tile([1.0, 0.1], a))
    R = 0.1 * np.eye(m)
    x_min = np.tile([-pos_limit, -np.inf], a)
    x_max = np.tile([pos_limit, np.inf], a)
    u_min = np.full(m, -u_limit)
    u_max = np.full(m, u_limit)
    problem = ProblemDefinition(
        dims=ProblemDims(n=n, m=m, N=N),
        dynamics=LinearDynamics(A=Aa, B=Ba, c=np.zeros(n)),
        cost=CostData(Q=Q, R=R),
        constraints=ConstraintSet(x_min=x_min, x_max=x_max, u_min=u_min, u_max=u_max),
    )
    x0 = np.zeros(n)
    if seed is not None:
        rng = np.random.default_rng(seed)
        x0[0::2] = rng.uniform(-0.1, 0.1, a)
    omega = 2.0 * math.pi / period
    nominal = _Sinusoid(axes=a, amplitude=amplitude, omega=omega, kp=8.0, kd=4.0)
    settings = Settings(rho=5.0, abs_pri_tol=0.01, abs_dua_tol=0.01, max_iter=500)
    return SafetyFilterProblem(
        axes=a,
        dt=dt,
        N=N,
        problem=problem,
        settings=settings,
        x0=x0,
        nominal=nominal,
        pos_limit=pos_limit,
    )


def make_rocket_landing(
    N: int = 16,
    dt: float = 0.05,
    max_thrust: float = 20.0,
    x0: Optional[np.ndarray] = None,
    land_time: float = 4.0,
    seed: Optional[int] = None,
) -> RocketLandingProblem:
    """Rocket soft-landing scenario with a thrust-direction cone.

    The thrust vector (mass-normalized, so in m/s^2) must satisfy
    norm(u_x, u_y) <= u_z: thrust points into an upward cone. max_thrust
    only shapes the scenario's reference scale; a magnitude box on cone
    coordinates is rejected by validation, deliberately.
    """
    dyn = _double_integrator_3d(dt)
    Q = np.diag([50.0, 50.0, 50.0, 5.0, 5.0, 5.0])
    R = np.eye(3)
    # Ground plane as a one-sided state box; legal next to the input cone
    # because cones and finite bounds may only coexist on disjoint indices.
    x_min = np.array([-np.inf, -np.inf, 0.0, -np.inf, -np.inf, -np.inf])
    problem = ProblemDefinition(
        dims=ProblemDims(n=6, m=3, N=N),
        dynamics=dyn,
        cost=CostData(Q=Q, R=R),
        constraints=ConstraintSet(
            x_min=x_min,
            input_cones=(ConeSlice(start=0, len=3),),
        ),
    )
    if x0 is None:
        x0 = np.array([4.0, 2.0, 20.0, -1.0, 1.0, -2.0])
    else:
        x0 = np.asarray(x0, dtype=np.float64).copy()
    if seed is not None:
        rng = np.random.default_rng(seed)
        x0 = x0 + np.concatenate([rng.uniform(-0.5, 0.5, 3), rng.uniform(-0.2, 0.2, 3)])
    settings = Settings(rho=5.0, abs_pri_tol=0.01, abs_dua_tol=0.01, max_iter=500)
    return RocketLandingProblem(
        dt=dt,
        N=N,
        problem=problem,
        settings=settings,
        x0=x0,
        goal=np.zeros(6),
        land_time=land_time,
        max_thrust=max_thrust,
    )


def make_spiral_landing(
    N: int = 20,
    dt: float = 0.02,
    radius: float = 1.0,
    alt0: float = 2.0,
    land_time: float = 4.0,
    period: float = 2.5,
    seed: Optional[int] = None,
) -> SpiralLandingProblem:
    """Helical-descent scenario with the 45-degree position cone active."""
    dyn = _double_integrator_3d(dt)
    Q = np.diag([40.0, 40.0, 40.0, 4.0, 4.0, 4.0])
    R = np.eye(3)
    problem = ProblemDefinition(
        dims=ProblemDims(n=6, m=3, N=N),
        dynamics=dyn,
        cost=CostData(Q=Q, R=R),
        constraints=ConstraintSet(state_cones=(ConeSlice(start=0, len=3),)),
    )
    omega = 2.0 * math.pi / period
    descent_rate = alt0 / land_time
    x0 = np.array([radius, 0.0, alt0, 0.0, radius * omega, -descent_rate])
    if seed is not None:
        rng = np.random.default_rng(seed)
        x0[:2] = x0[:2] + rng.uniform(-0.05, 0.05, 2)
    settings = Settings(rho=60.0, abs_pri_tol=1e-3, abs_dua_tol=2e-2, max_iter=500)
    return SpiralLandingProblem(
        dt=dt,
        N=N,
        problem=problem,
        settings=settings,
        x0=x0,
        goal=np.zeros(6),
        radius=radius,
        omega=omega,
        alt0=alt0,
        descent_rate=descent_rate,
    )


def trajectory_header(n: int, m: int) -> str:
    cols = ["step", "t"]
    cols += [f"x{i}" for i in range(n)]
    cols += [f"u{i}" for i in range(m)]
    cols += ["pri_res", "dua_res", "iters"]
    return ",".join(cols)


def _applied_violations(
    vp: ValidatedProblem, x_next: np.ndarray, u: np.ndarray
) -> Tuple[float, float, float]:
    """Positive-part violations of one applied step.

    Returns (box excess summed over coordinates, input-cone excess,
    state-cone excess); cone excess is max(0, norm(v) - a) summed over the
    cones of that kind.
    """
    con = vp.constraints
    box = 0.0
    if vp.has_state_bounds:
        box += float(np.sum(np.maximum(0.0, con.x_min - x_next)))
        box += float(np.sum(np.maximum(0.0, x_next - con.x_max)))
    if vp.has_input_bounds:
        box += float(np.sum(np.maximum(0.0, con.u_min - u)))
        box += float(np.sum(np.maximum(0.0, u - con.u_max)))
    cone_u = 0.0
    for cone in con.input_cones:
        seg = u[cone.start : cone.start + cone.len]
        cone_u += max(0.0, float(np.linalg.norm(seg[:-1])) - float(seg[-1]))
    cone_x = 0.0
    for cone in con.state_cones:
        seg = x_next[cone.start : cone.start + cone.len]
        cone_x += max(0.0, float(np.linalg.norm(seg[:-1])) - float(seg[-1]))
    return box, cone_u, cone_x


def run_closed_loop(
    scenario,
    steps: int,
    budget: int,
    warm_start: bool = True,
    settings: Optional[Settings] = None,
) -> RunResult:
    """Receding-horizon simulation of a scenario under an iteration budget.

    Per control step: references are refreshed for the current window, the
    problem is solved with max_iter = budget from the measured state, the
    first input is applied to the true dynamics (equal to the model), and
    the workspace persists into the next step unless warm_start is False,
    in which case it is zeroed (cold start) each step.
    """
    base = settings if settings is not None else scenario.settings
    st = replace(base, max_iter=int(budget))
    vp = validate(scenario.problem)
    cache = make_cache(vp, st.rho)
    ws = Workspace(vp.dims)
    n, m, N = vp.dims.n, vp.dims.m, vp.dims.N
    A, B, c = vp.dynamics.A, vp.dynamics.B, vp.dynamics.c

    x_ref = np.zeros((N, n))
    u_ref = np.zeros((N - 1, m))
    refs = References(x_ref=x_ref, u_ref=u_ref)

    states = np.zeros((steps + 1, n))
    inputs = np.zeros((max(steps, 1), m)) if steps > 0 else np.zeros((0, m))
    table = np.zeros((steps, 2 + n + m + 3))
    statuses: List[Status] = []
    iters = np.zeros(steps, dtype=int)
    cone_u_per_step = np.zeros(steps)
    cone_x_per_step = np.zeros(steps)
    box_per_step = np.zeros(steps)

    state = np.asarray(scenario.x0, dtype=np.float64).copy()
    states[0] = state
    total_violation = 0.0
    for i in range(steps):
        scenario.fill_references(i, state, x_ref, u_ref)
        refs_to_linear_cost(refs, vp.cost, cache.Pinf, out_q=vp.cost.q, out_r=vp.cost.r)
        if not warm_start:
            ws.zero()
        report = solve(ws, vp, cache, st, state)
        u_app = report.u[0].copy()
        state = A @ state + B @ u_app + c
        states[i + 1] = state
        inputs[i] = u_app
        statuses.append(report.status)
        iters[i] = report.iterations
        box, cone_u, cone_x = _applied_violations(vp, state, u_app)
        box_per_step[i] = box
        cone_u_per_step[i] = cone_u
        cone_x_per_step[i] = cone_x
        total_violation += box + cone_u + cone_x
        row = table[i]
        row[0] = i
        row[1] = i * scenario.dt
        row[2 : 2 + n] = state
        row[2 + n : 2 + n + m] = u_app
        row[2 + n + m] = report.pri_res
        row[2 + n + m + 1] = report.dua_res
        row[2 + n + m + 2] = report.iterations

    goal = getattr(scenario, "goal", None)
    if goal is not None and steps > 0:
        landing_error = float(np.linalg.norm(states[steps] - goal))
    else:
        landing_error = 0.0
    metrics = ClosedLoopMetrics(
        total_violation=total_violation if steps > 0 else 0.0,
        landing_error=landing_error if steps > 0 else 0.0,
    )
    return RunResult(
        metrics=metrics,
        states=states,
        inputs=inputs,
        table=table,
        header=trajectory_header(n, m),
        statuses=statuses,
        iterations=iters,
        input_cone_excess=cone_u_per_step,
        state_cone_excess=cone_x_per_step,
        box_excess=box_per_step,
    )


def rollout_nominal(scenario: SafetyFilterProblem, steps: int) -> np.ndarray:
    """Apply the nominal policy directly (filter disabled); returns states."""
    A = scenario.problem.dynamics.A
    B = scenario.problem.dynamics.B
    states = np.zeros((steps + 1, A.shape[0]))
    state = np.asarray(scenario.x0, dtype=np.float64).copy()
    states[0] = state
    for i in range(steps):
        u = scenario.nominal.command(i * scenario.dt, state)
        state = A @ state + B @ u
        states[i + 1] = state
    return states


def format_record(scenario, budget: int, steps: int, result: RunResult) -> str:
    """One structured-text record line for a closed-loop run."""
    vp_dims = scenario.problem.dims
    solved = sum(1 for s in result.statuses if s is Status.SOLVED)
    iters_list = ",".join(str(int(v)) for v in result.iterations)
    return (
        f"scenario={scenario.name} n={vp_dims.n} m={vp_dims.m} N={vp_dims.N} "
        f"budget={budget} steps={steps} solved={solved} "
        f"total_violation={result.metrics.total_violation:.6g} "
        f"landing_error={result.metrics.landing_error:.6g} "
        f"iters_per_step={iters_list}"
    )


def _time_iterations(
    problem: ProblemDefinition, rho: float, iters: int, repeats: int
) -> List[float]:
    """Per-iteration wall-clock samples from fixed-iteration solves.

    Termination checks are disabled so every sample runs exactly ``iters``
    iterations; the workspace is zeroed between repeats. A nonzero x0 keeps
    the iterates away from the all-feasible fast path of the projections.
    """
    vp = validate(problem)
    cache = make_cache(vp, rho)
    ws = Workspace(vp.dims)
    st = Settings(rho=rho, max_iter=iters, check_termination=0)
    x0 = np.full(vp.dims.n, 0.37)
    samples = []
    for _ in range(repeats):
        ws.zero()
        t0 = time.perf_counter()
        solve(ws, vp, cache, st, x0)
        samples.append((time.perf_counter() - t0) / iters)
    return samples


def measure_per_iteration_time(
    problem: ProblemDefinition,
    rho: float = 1.0,
    iters: int = 30,
    repeats: int = 3,
) -> float:
    """Median wall-clock seconds per solve-loop iteration."""
    samples = sorted(_time_iterations(problem, rho, iters, repeats))
    return samples[len(samples) // 2]


def measure_iteration_stats(
    problem: ProblemDefinition,
    rho: float = 1.0,
    iters: int = 30,
    repeats: int = 3,
) -> Tuple[float, float]:
    """(mean, max) wall-clock seconds per solve-loop iteration."""
    samples = _time_iterations(problem, rho, iters, repeats)
    return sum(samples) / len(samples), max(samples)
