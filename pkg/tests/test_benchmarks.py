"""Closed-loop harness: scenario construction, metrics, determinism."""

import numpy as np
import pytest

from tinysocp import benchmarks
from tinysocp.benchmarks import (
    ClosedLoopMetrics,
    format_record,
    make_rocket_landing,
    make_safety_filter,
    make_spiral_landing,
    measure_iteration_stats,
    measure_per_iteration_time,
    rollout_nominal,
    run_closed_loop,
    trajectory_header,
)
from tinysocp.problem import Status, validate


def test_trajectory_header_layout():
    assert trajectory_header(2, 1) == "step,t,x0,x1,u0,pri_res,dua_res,iters"
    assert trajectory_header(3, 2).count("x") == 3


def test_scenarios_validate():
    for sc in (make_safety_filter(), make_rocket_landing(), make_spiral_landing()):
        vp = validate(sc.problem)
        assert vp.dims.N >= 2
        assert sc.settings.rho > 0


def test_safety_filter_dimensions_scale_with_axes():
    sc = make_safety_filter(a=3)
    assert sc.problem.dims.n == 6 and sc.problem.dims.m == 3


def test_double_integrator_dynamics_consistent():
    sc = make_rocket_landing()
    A, B, c = sc.problem.dynamics.A, sc.problem.dynamics.B, sc.problem.dynamics.c
    # gravity enters position and velocity rows of the z axis only
    assert c[2] < 0 and c[5] < 0
    assert np.count_nonzero(c) == 2
    # one Euler step from rest under pure gravity drops altitude
    x = np.zeros(6)
    x1 = A @ x + B @ np.zeros(3) + c
    assert x1[2] < 0 and x1[5] < 0


def test_closed_loop_deterministic_given_seed():
    sc1 = make_safety_filter(seed=9)
    sc2 = make_safety_filter(seed=9)
    r1 = run_closed_loop(sc1, steps=5, budget=40)
    r2 = run_closed_loop(sc2, steps=5, budget=40)
    assert np.array_equal(r1.states, r2.states)
    assert np.array_equal(r1.table, r2.table)


def test_closed_loop_states_follow_plant():
    sc = make_rocket_landing()
    res = run_closed_loop(sc, steps=4, budget=50)
    A, B, c = sc.problem.dynamics.A, sc.problem.dynamics.B, sc.problem.dynamics.c
    for k in range(4):
        expect = A @ res.states[k] + B @ res.inputs[k] + c
        assert np.allclose(res.states[k + 1], expect, atol=1e-12)
    assert res.table.shape == (4, 2 + 6 + 3 + 3)
    assert len(res.statuses) == 4
    assert isinstance(res.metrics, ClosedLoopMetrics)


def test_budget_caps_iterations():
    sc = make_rocket_landing()
    res = run_closed_loop(sc, steps=4, budget=7)
    assert all(it <= 7 for it in res.iterations)
    assert any(s is Status.MAX_ITERS for s in res.statuses)


def test_violation_metric_positive_when_squeezed():
    sc = make_rocket_landing()
    tight = run_closed_loop(sc, steps=25, budget=2)
    assert tight.metrics.total_violation > 0.0
    assert tight.input_cone_excess.shape == (25,)


def test_rollout_nominal_exceeds_filter_band():
    sc = make_safety_filter(seed=5)
    states = rollout_nominal(sc, steps=200)
    assert np.max(np.abs(states[:, 0])) > 1.0


def test_format_record_fields():
    sc = make_safety_filter(seed=5)
    res = run_closed_loop(sc, steps=3, budget=30)
    line = format_record(sc, 30, 3, res)
    assert line.startswith("scenario=safety-filter ")
    for token in ("n=2", "m=1", "N=15", "budget=30", "steps=3",
                  "total_violation=", "landing_error=", "iters_per_step="):
        assert token in line
    assert len(line.split("iters_per_step=")[1].split(",")) == 3


def test_landing_error_uses_goal():
    sc = make_rocket_landing()
    res = run_closed_loop(sc, steps=3, budget=40)
    expect = float(np.linalg.norm(res.states[3] - sc.goal))
    assert abs(res.metrics.landing_error - expect) < 1e-12


def test_spiral_reference_parks_after_touchdown():
    sc = make_spiral_landing()
    N, n, m = sc.problem.dims.N, sc.problem.dims.n, sc.problem.dims.m
    x_ref = np.zeros((N, n))
    u_ref = np.zeros((N - 1, m))
    sc.fill_references(0, sc.x0, x_ref, u_ref)
    assert np.linalg.norm(x_ref[0, :2]) > 0.5
    # long after touchdown every knot pins the origin
    touchdown = sc.alt0 / sc.descent_rate
    late_step = int(10 * touchdown / sc.dt)
    sc.fill_references(late_step, sc.x0, x_ref, u_ref)
    assert np.allclose(x_ref, 0.0)
    # hover thrust still cancels gravity after the park
    assert np.allclose(u_ref[:, :2], 0.0)
    assert np.all(u_ref[:, 2] > 0.0)


def test_measure_helpers_return_positive():
    sc = make_safety_filter()
    t_med = measure_per_iteration_time(sc.problem, rho=sc.settings.rho, iters=5, repeats=2)
    mean_s, max_s = measure_iteration_stats(sc.problem, rho=sc.settings.rho, iters=5, repeats=2)
    assert t_med > 0 and mean_s > 0
    assert max_s >= mean_s


def test_cold_start_zeroes_between_steps():
    sc = make_safety_filter(seed=4)
    warm = run_closed_loop(sc, steps=4, budget=35, warm_start=True)
    sc2 = make_safety_filter(seed=4)
    cold = run_closed_loop(sc2, steps=4, budget=35, warm_start=False)
    assert not np.array_equal(warm.inputs, cold.inputs)
