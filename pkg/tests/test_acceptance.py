"""Acceptance gate: one test per shipping criterion, one printed line each.

Every test prints `[acceptance NN] PASS|FAIL <name>` on the live terminal
(bypassing capture) before asserting, so a full run always shows the
scorecard. Tolerances here are the shipping thresholds, not the tighter
ones the unit suites use.
"""

import time
import tracemalloc
from dataclasses import replace

import numpy as np
import pytest

from tinysocp import alloc
from tinysocp.benchmarks import (
    make_rocket_landing,
    make_safety_filter,
    make_spiral_landing,
    measure_per_iteration_time,
    rollout_nominal,
    run_closed_loop,
)
from tinysocp.codegen import (
    audit_generated_tree,
    compile_generated_tree,
    estimate_footprint,
    generate,
    run_generated_trace,
)
from tinysocp.oracles import (
    dare_residual,
    grid_projection_oracle,
    kkt_solve,
    reference_admm,
    riccati_linear_reference,
)
from tinysocp.problem import (
    ConeSlice,
    ConstraintSet,
    CostData,
    LinearDynamics,
    ProblemDefinition,
    ProblemDims,
    Settings,
    Status,
    Workspace,
    trajectory_cost,
    validate,
)
from tinysocp.riccati import RiccatiError, make_cache
from tinysocp.solver import backward_pass, forward_pass, iterate, solve


def _report(capsys, num, name, ok, detail=""):
    line = f"[acceptance {num:02d}] {'PASS' if ok else 'FAIL'} {name}"
    if detail:
        line += f" ({detail})"
    with capsys.disabled():
        print(line)
    assert ok, line


def _random_system(rng, n, m, N, with_c=False, constraints=None):
    """Random stabilizable problem; redraws dynamics until the DARE settles."""
    for _ in range(60):
        A = rng.normal(0.0, 0.45 / np.sqrt(n), (n, n)) + 0.3 * np.eye(n)
        B = rng.normal(0.0, 0.6, (n, m))
        c = rng.normal(0.0, 0.2, n) if with_c else np.zeros(n)
        Q = np.diag(rng.uniform(0.1, 5.0, n))
        R = np.diag(rng.uniform(0.1, 2.0, m))
        vp = validate(
            ProblemDefinition(
                dims=ProblemDims(n=n, m=m, N=N),
                dynamics=LinearDynamics(A=A, B=B, c=c),
                cost=CostData(Q=Q, R=R),
                constraints=constraints if constraints is not None else ConstraintSet(),
            )
        )
        try:
            cache = make_cache(vp, rho=1.0)
        except RiccatiError:
            continue
        return vp, cache
    raise AssertionError("could not draw a stabilizable system")


def test_01_soc_projection_against_grid(capsys):
    from tinysocp.projections import project_soc

    t0 = time.perf_counter()
    rng = np.random.default_rng(18)
    worst_gap = -np.inf
    worst_idem = 0.0
    worst_expand = -np.inf
    for _ in range(1000):
        z = rng.uniform(-3.0, 3.0, 3)
        p = project_soc(z)
        y = grid_projection_oracle(z, grid_resolution=400)
        gap = float(np.linalg.norm(z - p) - np.linalg.norm(z - y))
        worst_gap = max(worst_gap, gap)
        worst_idem = max(worst_idem, float(np.linalg.norm(project_soc(p) - p)))
        b = rng.uniform(-3.0, 3.0, 3)
        expand = float(
            np.linalg.norm(project_soc(z) - project_soc(b)) - np.linalg.norm(z - b)
        )
        worst_expand = max(worst_expand, expand)
    elapsed = time.perf_counter() - t0
    ok = (
        worst_gap <= 1e-6
        and worst_idem <= 1e-12
        and worst_expand <= 1e-12
        and elapsed < 10.0
    )
    _report(
        capsys, 1, "soc projection beats the grid oracle", ok,
        f"gap {worst_gap:.3g}, idem {worst_idem:.3g}, "
        f"expand {worst_expand:.3g}, {elapsed:.1f}s",
    )


def test_02_dare_fixed_point(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(181)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 5))
        vp, cache = _random_system(rng, n, m, N=3)
        Qt = vp.cost.Q + cache.rho * np.eye(n)
        Rt = vp.cost.R + cache.rho * np.eye(m)
        worst = max(worst, dare_residual(vp.dynamics, Qt, Rt, cache.Kinf, cache.Pinf))
    # scalar x+ = x + u with unit weights has the closed-form fixed point
    scalar = validate(
        ProblemDefinition(
            dims=ProblemDims(n=1, m=1, N=3),
            dynamics=LinearDynamics(A=np.eye(1), B=np.eye(1), c=np.zeros(1)),
            cost=CostData(Q=np.eye(1), R=np.eye(1)),
            constraints=ConstraintSet(),
        )
    )
    sc_cache = make_cache(scalar, rho=1e-11)
    golden_err = abs(float(sc_cache.Pinf[0, 0]) - (1.0 + np.sqrt(5.0)) / 2.0)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and golden_err <= 1e-9 and elapsed < 10.0
    _report(
        capsys, 2, "riccati cache solves the fixed point", ok,
        f"residual {worst:.3g}, closed-form {golden_err:.3g}, {elapsed:.1f}s",
    )


def test_03_cached_backward_matches_explicit(capsys):
    rng = np.random.default_rng(1818)
    worst = 0.0
    for i in range(20):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 4))
        N = int(rng.integers(4, 20))
        vp, cache = _random_system(rng, n, m, N, with_c=(i % 2 == 0))
        ws = Workspace(vp.dims)
        ws.qt[:] = rng.normal(0.0, 1.0, ws.qt.shape)
        ws.rt[:] = rng.normal(0.0, 1.0, ws.rt.shape)
        qt, rt = ws.qt.copy(), ws.rt.copy()
        backward_pass(ws, cache, vp.dynamics)
        Rt = vp.cost.R + cache.rho * np.eye(m)
        d_ref, p_ref = riccati_linear_reference(
            vp.dynamics, cache.Kinf, cache.Pinf, Rt, qt, rt
        )
        worst = max(worst, float(np.max(np.abs(ws.d - d_ref))))
        worst = max(worst, float(np.max(np.abs(ws.p - p_ref))))
    ok = worst <= 1e-10
    _report(
        capsys, 3, "cached backward pass equals explicit recursion", ok,
        f"max dev {worst:.3g} over 20 problems",
    )


def test_04_primal_update_matches_kkt(capsys):
    rng = np.random.default_rng(4242)
    worst = 0.0
    for i in range(20):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 4))
        N = int(rng.integers(4, 31))
        vp, cache = _random_system(rng, n, m, N, with_c=(i % 3 == 0))
        ws = Workspace(vp.dims)
        ws.qt[:] = rng.normal(0.0, 1.0, ws.qt.shape)
        ws.rt[:] = rng.normal(0.0, 1.0, ws.rt.shape)
        x0 = rng.normal(0.0, 1.0, n)
        x_kkt, u_kkt = kkt_solve(vp, cache, ws.qt, ws.rt, x0)
        backward_pass(ws, cache, vp.dynamics)
        forward_pass(ws, cache, vp.dynamics, x0)
        worst = max(worst, float(np.max(np.abs(ws.x - x_kkt))))
        worst = max(worst, float(np.max(np.abs(ws.u - u_kkt))))
    ok = worst <= 1e-8
    _report(
        capsys, 4, "primal update equals dense kkt solve", ok,
        f"max dev {worst:.3g} over 20 problems",
    )


def test_05_constrained_convergence_vs_reference(capsys):
    t0 = time.perf_counter()
    vp = validate(
        ProblemDefinition(
            dims=ProblemDims(n=2, m=1, N=80),
            dynamics=LinearDynamics(
                A=np.array([[1.0, 0.1], [0.0, 1.0]]),
                B=np.array([[0.005], [0.1]]),
                c=np.zeros(2),
            ),
            cost=CostData(Q=np.diag([10.0, 1.0]), R=np.eye(1) * 0.5),
            constraints=ConstraintSet(u_min=np.array([-0.5]), u_max=np.array([0.5])),
        )
    )
    cache = make_cache(vp, rho=5.0)
    x0 = np.array([1.5, 0.0])
    st = Settings(rho=5.0, abs_pri_tol=1e-6, abs_dua_tol=1e-6, max_iter=20000)
    ws = Workspace(vp.dims)
    rep = solve(ws, vp, cache, st, x0)
    parity = Settings(rho=5.0, abs_pri_tol=0.01, abs_dua_tol=0.01, max_iter=20000)
    rep_parity = solve(Workspace(vp.dims), vp, cache, parity, x0)
    ref = reference_admm(vp, x0, iters=100000, tol=1e-9, rho=5.0)
    obj_mine = trajectory_cost(vp.cost, rep.x, rep.u)
    obj_ref = trajectory_cost(vp.cost, ref.x, ref.u)
    gap = abs(obj_mine - obj_ref) / max(1.0, abs(obj_ref))
    elapsed = time.perf_counter() - t0
    ok = (
        rep.status is Status.SOLVED
        and rep.pri_res < 1e-3
        and rep.dua_res < 1e-3
        and rep_parity.status is Status.SOLVED
        and ref.pri_res < 1e-6
        and gap <= 1e-4
        and elapsed < 30.0
    )
    _report(
        capsys, 5, "box-constrained solve matches long reference", ok,
        f"residuals {rep.pri_res:.2g}/{rep.dua_res:.2g}, "
        f"objective gap {gap:.3g}, {elapsed:.1f}s",
    )


def test_06_safety_filter_keeps_the_box(capsys):
    sc = make_safety_filter()
    res = run_closed_loop(sc, steps=200, budget=500)
    applied_max = float(np.max(np.abs(res.states[:, 0])))
    nominal = rollout_nominal(sc, steps=200)
    nominal_max = float(np.max(np.abs(nominal[:, 0])))
    ok = applied_max <= sc.pos_limit + 0.01 and nominal_max > 1.0
    _report(
        capsys, 6, "safety filter holds the position box", ok,
        f"filtered max |pos| {applied_max:.4f}, nominal {nominal_max:.3f}",
    )


def test_07_rocket_budget_ladder(capsys):
    runs = {
        b: run_closed_loop(make_rocket_landing(), steps=90, budget=b)
        for b in (3, 33, 444)
    }
    cold33 = run_closed_loop(
        make_rocket_landing(), steps=90, budget=33, warm_start=False
    )
    cone_per_step = float(np.max(runs[444].input_cone_excess))
    land = {b: runs[b].metrics.landing_error for b in runs}
    ok = (
        cone_per_step <= 1e-2
        and land[444] <= land[3]
        and runs[33].metrics.landing_error <= cold33.metrics.landing_error
    )
    _report(
        capsys, 7, "rocket budget ladder orders landings", ok,
        f"cone excess {cone_per_step:.2g}, landing 444/3 {land[444]:.4f}/{land[3]:.4f}, "
        f"warm/cold@33 {runs[33].metrics.landing_error:.4f}/"
        f"{cold33.metrics.landing_error:.4f}",
    )


def test_08_spiral_respects_position_cone(capsys):
    res = run_closed_loop(make_spiral_landing(), steps=260, budget=500)
    solved = np.array([s is Status.SOLVED for s in res.statuses])
    worst_excess = float(np.max(res.state_cone_excess[solved])) if solved.any() else np.inf
    off = run_closed_loop(
        make_spiral_landing(),
        steps=260,
        budget=500,
        settings=replace(make_spiral_landing().settings, en_state_soc=False),
    )
    violations = int(np.sum(off.state_cone_excess > 1e-2))
    ok = solved.sum() >= 130 and worst_excess <= 1e-2 and violations >= 1
    _report(
        capsys, 8, "spiral stays inside the position cone", ok,
        f"{int(solved.sum())}/260 converged, excess {worst_excess:.2g}, "
        f"unconstrained violates {violations} steps",
    )


def test_09_codegen_differential(capsys, tmp_path):
    rng = np.random.default_rng(9090)
    names = ("x", "u", "z", "w", "y", "g", "p", "d")
    worst = 0.0
    for i in range(10):
        m = int(rng.integers(2, 4))
        n = int(rng.integers(2, 5))
        N = int(rng.integers(4, 9))
        kind = i % 4
        if kind == 0:
            lim = rng.uniform(0.2, 1.0, m)
            con = ConstraintSet(u_min=-lim, u_max=lim)
        elif kind == 1:
            lim = rng.uniform(0.5, 2.0, n)
            con = ConstraintSet(x_min=-lim, x_max=lim)
        elif kind == 2:
            con = ConstraintSet(input_cones=(ConeSlice(0, m),))
        else:
            lim = rng.uniform(0.5, 2.0, n)
            con = ConstraintSet(
                x_min=-lim, x_max=lim, input_cones=(ConeSlice(0, m),)
            )
        vp, cache = _random_system(rng, n, m, N, with_c=(i % 2 == 0), constraints=con)
        st = Settings(rho=1.0, max_iter=100, check_termination=0)
        x0 = rng.normal(0.0, 0.5, n)
        out = tmp_path / f"tree_{i}"
        generate(vp, cache, st, out, precision="f64", x0=x0)
        assert audit_generated_tree(out) == []
        binary = compile_generated_tree(out)
        ct = run_generated_trace(binary, n, m, N, st.max_iter)
        ws = Workspace(vp.dims)
        mine = {nm: [] for nm in names}
        for _ in range(st.max_iter):
            iterate(ws, vp, cache, st, x0)
            for nm in names:
                mine[nm].append(getattr(ws, nm).copy())
        for nm in names:
            dev = float(np.max(np.abs(np.array(mine[nm]) - ct[nm])))
            worst = max(worst, dev)
    ok = worst == 0.0
    _report(
        capsys, 9, "generated solver reproduces iterates exactly", ok,
        f"max deviation {worst:.3g} over 10 problems x 100 iterations",
    )


def test_10_solve_allocates_nothing(capsys):
    sc = make_rocket_landing()
    vp = validate(sc.problem)
    cache = make_cache(vp, sc.settings.rho)
    ws = Workspace(vp.dims)
    st = replace(sc.settings, max_iter=120, check_termination=10)
    solve(ws, vp, cache, st, sc.x0)  # warm the pipeline
    with alloc.watch() as guard:
        solve(ws, vp, cache, st, sc.x0)
    counted = guard.count
    tracemalloc.start()
    before = tracemalloc.take_snapshot()
    for _ in range(3):
        solve(ws, vp, cache, st, sc.x0)
    after = tracemalloc.take_snapshot()
    tracemalloc.stop()
    grown = 0
    for stat in after.compare_to(before, "lineno"):
        frame = stat.traceback[0]
        if "tinysocp" in frame.filename and stat.size_diff > 0:
            grown += stat.size_diff
    ok = counted == 0 and grown <= 256
    _report(
        capsys, 10, "solve performs zero allocations", ok,
        f"watched {counted}, traced growth {grown} bytes",
    )


def test_11_iteration_cost_scales_linearly(capsys):
    horizons = [8, 16, 32, 64, 128, 256]
    times = []
    data_bytes = []
    work_bytes = []
    for N in horizons:
        sc = make_rocket_landing(N=N)
        vp = validate(sc.problem)
        times.append(
            measure_per_iteration_time(vp, rho=sc.settings.rho, iters=30, repeats=5)
        )
        d, w = estimate_footprint(vp, "f32")
        data_bytes.append(d)
        work_bytes.append(w)
    ns = np.array(horizons, dtype=float)
    exponent = float(np.polyfit(np.log(ns), np.log(np.array(times)), 1)[0])
    # affine-in-N layout: two points pin the line, the rest must sit on it
    ok_fit = exponent <= 1.15
    ok_lin = True
    for seq in (data_bytes, work_bytes):
        beta = (seq[1] - seq[0]) / (horizons[1] - horizons[0])
        alpha = seq[0] - beta * horizons[0]
        ok_lin = ok_lin and all(
            seq[i] == alpha + beta * horizons[i] for i in range(len(horizons))
        )
    ok = ok_fit and ok_lin
    _report(
        capsys, 11, "per-iteration time and footprint stay linear", ok,
        f"fit exponent {exponent:.3f}, footprint affine: {ok_lin}",
    )
