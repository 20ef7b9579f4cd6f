"""Command-line entry point: solve, simulate, bench, codegen, verify.

File-based workflows over the library. Exit codes are scripting contract:
0 for success (a solve that converged), 2 when the iteration budget ran
out, 1 for input errors (missing file, malformed key, bad dimensions).
Trajectory tables are comma-separated with a fixed header; every output
file is written atomically. Randomized content honors ``--seed`` and falls
back to the ``TINYSOCP_SEED`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np

from . import benchmarks
from ._version import __version__
from .codegen import estimate_footprint, generate
from .oracles import (
    dare_residual,
    grid_projection_oracle,
    kkt_solve,
    reference_admm,
)
from .problem import (
    References,
    Status,
    ValidationError,
    Workspace,
    refs_to_linear_cost,
    trajectory_cost,
    validate,
)
from .problemfile import ProblemFileError, atomic_write_text, load_problem
from .projections import project_soc, soc_inplace
from .riccati import RiccatiError, augment_costs, make_cache
from .solver import solve

__all__ = ["main"]

_SCENARIOS = {
    "safety-filter": benchmarks.make_safety_filter,
    "rocket": benchmarks.make_rocket_landing,
    "spiral": benchmarks.make_spiral_landing,
}


def _seed_from(args: argparse.Namespace) -> Optional[int]:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("TINYSOCP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ProblemFileError(f"TINYSOCP_SEED: expected an integer, got {env!r}")
    return None


def _parse_x0(text: str, n: int) -> np.ndarray:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ProblemFileError(f"x0: expected {n} comma-separated numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ProblemFileError(f"x0: {exc}") from exc


def _read_ref_table(path: str, rows: int, cols: int) -> np.ndarray:
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ProblemFileError(f"{path}: not a numeric table ({exc})") from exc
    if raw.shape != (rows, cols):
        raise ProblemFileError(
            f"{path}: expected a {rows}x{cols} table, got {raw.shape[0]}x{raw.shape[1]}"
        )
    return raw


def _solve_table(report, n: int, m: int, N: int) -> str:
    """Stage-indexed table of one open-loop solve; terminal input is nan."""
    cols = ["k"] + [f"x{i}" for i in range(n)] + [f"u{i}" for i in range(m)]
    lines = [",".join(cols)]
    for k in range(N):
        row = [str(k)]
        row += [repr(float(v)) for v in report.x[k]]
        if k < N - 1:
            row += [repr(float(v)) for v in report.u[k]]
        else:
            row += ["nan"] * m
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_solve(args: argparse.Namespace) -> int:
    problem, settings = load_problem(args.problem)
    vp = validate(problem)
    n, m, N = vp.dims.n, vp.dims.m, vp.dims.N
    x0 = _parse_x0(args.x0, n)
    cache = make_cache(vp, settings.rho)
    if args.xref is not None or args.uref is not None:
        x_ref = (
            _read_ref_table(args.xref, N, n) if args.xref is not None else np.zeros((N, n))
        )
        u_ref = (
            _read_ref_table(args.uref, N - 1, m)
            if args.uref is not None
            else np.zeros((N - 1, m))
        )
        refs = References(x_ref=x_ref, u_ref=u_ref)
        refs_to_linear_cost(refs, vp.cost, cache.Pinf, out_q=vp.cost.q, out_r=vp.cost.r)
    ws = Workspace(vp.dims)
    report = solve(ws, vp, cache, settings, x0)
    name = "Solved" if report.status is Status.SOLVED else "MaxIters"
    print(f"{name},{report.iterations},{report.pri_res:.9g},{report.dua_res:.9g}")
    if args.out is not None:
        atomic_write_text(args.out, _solve_table(report, n, m, N))
    return 0 if report.status is Status.SOLVED else 2


def _table_text(header: str, table: np.ndarray) -> str:
    lines = [header]
    for row in table:
        cells = []
        for j, v in enumerate(row):
            if j == 0 or j == row.shape[0] - 1:
                cells.append(str(int(v)))
            else:
                cells.append(repr(float(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    seed = _seed_from(args)
    scenario = _SCENARIOS[args.scenario](seed=seed)
    result = benchmarks.run_closed_loop(
        scenario, steps=args.steps, budget=args.budget, warm_start=not args.cold_start
    )
    print(benchmarks.format_record(scenario, args.budget, args.steps, result))
    if args.out is not None:
        atomic_write_text(args.out, _table_text(result.header, result.table))
    return 0


def _bench_points(lo: int, hi: int, cap: int = 25) -> List[int]:
    if hi - lo + 1 <= cap:
        return list(range(lo, hi + 1))
    pts = np.unique(np.linspace(lo, hi, cap).round().astype(int))
    return [int(v) for v in pts]


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        lo_s, hi_s = args.range.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
    except ValueError as exc:
        raise ProblemFileError(f"range: expected A..B integers, got {args.range!r}") from exc
    if lo < 1 or hi < lo:
        raise ProblemFileError("range: need 1 <= A <= B")
    if args.suite == "safety-filter" and args.sweep != "state":
        raise ProblemFileError("suite safety-filter sweeps the state dimension (a axes, n=2a)")
    if args.suite == "rocket" and args.sweep != "horizon":
        raise ProblemFileError("suite rocket sweeps the horizon N (need A >= 2)")

    rows = ["suite,sweep,value,n,m,N,mean_iter_time_s,max_iter_time_s,data_bytes_f32,workspace_bytes_f32"]
    for value in _bench_points(lo, hi):
        if args.suite == "safety-filter":
            scenario = benchmarks.make_safety_filter(a=value)
        else:
            scenario = benchmarks.make_rocket_landing(N=value)
        prob = scenario.problem
        dims = prob.dims
        mean_s, max_s = benchmarks.measure_iteration_stats(
            prob, rho=scenario.settings.rho, iters=args.iters, repeats=args.repeats
        )
        db, wb = estimate_footprint(prob, "f32")
        rows.append(
            f"{args.suite},{args.sweep},{value},{dims.n},{dims.m},{dims.N},"
            f"{mean_s:.9g},{max_s:.9g},{db},{wb}"
        )
        print(rows[-1])
    if args.out is not None:
        atomic_write_text(args.out, "\n".join(rows) + "\n")
    return 0


def cmd_codegen(args: argparse.Namespace) -> int:
    problem, settings = load_problem(args.problem)
    vp = validate(problem)
    cache = make_cache(vp, settings.rho)
    tree = generate(vp, cache, settings, args.out, precision=args.precision)
    print(
        f"generated {args.precision} tree at {tree.out_dir} "
        f"(n={vp.dims.n} m={vp.dims.m} N={vp.dims.N}, "
        f"data {tree.data_bytes} B, workspace {tree.workspace_bytes} B)"
    )
    for f in tree.files:
        print(f"  {f}")
    return 0


def _feasible_state(x0: np.ndarray, con) -> np.ndarray:
    """Push a raw draw into the state constraint set (box, cones, box)."""
    if con.x_min is not None:
        np.clip(x0, con.x_min, con.x_max, out=x0)
    for cone in con.state_cones:
        soc_inplace(x0, cone.start, cone.len)
    if con.x_min is not None:
        np.clip(x0, con.x_min, con.x_max, out=x0)
    return x0


def _verify_checks(problem, settings, seed: Optional[int]):
    """Oracle suite for one problem file; yields (name, passed, detail)."""
    rng = np.random.default_rng(0 if seed is None else seed)
    vp = validate(problem)
    n, m, N = vp.dims.n, vp.dims.m, vp.dims.N
    cache = make_cache(vp, settings.rho)

    Qt, Rt = augment_costs(vp.cost, settings.rho)
    res = dare_residual(vp.dynamics, Qt, Rt, cache.Kinf, cache.Pinf)
    yield "riccati-fixed-point", res < 1e-8, f"residual {res:.3e} (tol 1e-8)"

    worst = 0.0
    worst_idem = 0.0
    for _ in range(50):
        z = rng.normal(scale=2.0, size=3)
        p = project_soc(z)
        best = grid_projection_oracle(z, grid_resolution=120)
        # p must beat every feasible grid candidate; a positive gap means
        # the closed form returned a non-optimal point.
        gap = np.linalg.norm(z - p) - np.linalg.norm(z - best)
        worst = max(worst, float(gap))
        p2 = project_soc(p)
        worst_idem = max(worst_idem, float(np.max(np.abs(p2 - p))))
    ok = worst <= 1e-9 and worst_idem <= 1e-12
    yield "cone-projection-oracle", ok, f"optimality gap {worst:.3e}, idempotence {worst_idem:.3e}"

    # Stage 0 is projected like every other knot, so an initial state
    # outside the state constraint set makes the splitting infeasible and
    # both solvers stall by design. Draw x0, then push it into the set.
    x0 = _feasible_state(rng.normal(scale=0.5, size=n), vp.constraints)
    free = replace(
        settings,
        en_state_bound=False,
        en_input_bound=False,
        en_state_soc=False,
        en_input_soc=False,
        max_iter=5000,
        abs_pri_tol=1e-9,
        abs_dua_tol=1e-9,
        check_termination=10,
    )
    ws = Workspace(vp.dims)
    rep = solve(ws, vp, cache, free, x0)
    xs, us = kkt_solve(vp, cache, ws.qt, ws.rt, x0)
    gap = max(float(np.max(np.abs(rep.x - xs))), float(np.max(np.abs(rep.u - us))))
    yield "kkt-agreement", gap < 1e-6, f"unconstrained gap {gap:.3e} (tol 1e-6)"

    # The two solvers optimize objectives that differ only in the terminal
    # Hessian (reference: the problem's Q; cached: the implicit Pinf - rho*I
    # left by folding the penalty into the terminal value function). Each
    # converged trajectory is a feasible challenger for the other, so each
    # must win under its own objective at any horizon. A fixed-gap objective
    # comparison would instead measure the system's settling time.
    # A projected draw can still land on a corner of the feasible set where
    # splitting methods crawl (large active duals). Keep drawing until the
    # reference run itself converges; give up honestly after a few tries.
    ref = None
    for _ in range(8):
        ref = reference_admm(vp, x0, iters=8000, tol=1e-8, rho=settings.rho)
        if ref.pri_res < 1e-6 and ref.dua_res < 1e-6:
            break
        x0 = _feasible_state(rng.normal(scale=0.35, size=n), vp.constraints)
    else:
        yield (
            "reference-splitting-agreement",
            False,
            f"no draw converged the reference (last pri {ref.pri_res:.3e}, dua {ref.dua_res:.3e})",
        )
        return
    tight = replace(settings, abs_pri_tol=1e-7, abs_dua_tol=1e-7, max_iter=20000)
    ws2 = Workspace(vp.dims)
    rep2 = solve(ws2, vp, cache, tight, x0)
    if rep2.status is not Status.SOLVED:
        yield (
            "reference-splitting-agreement",
            False,
            f"cached solver stalled (pri {rep2.pri_res:.3e}, dua {rep2.dua_res:.3e})",
        )
        return

    def shaped(xs_, us_):
        base = trajectory_cost(vp.cost, xs_, us_)
        xN = xs_[-1]
        term = cache.Pinf - settings.rho * np.eye(n) - vp.cost.Q
        return base + 0.5 * float(xN @ term @ xN)

    scale = max(1.0, abs(trajectory_cost(vp.cost, ref.x, ref.u)))
    loss_mine = (shaped(rep2.x, rep2.u) - shaped(ref.x, ref.u)) / scale
    loss_ref = (
        trajectory_cost(vp.cost, ref.x, ref.u) - trajectory_cost(vp.cost, rep2.x, rep2.u)
    ) / scale
    worst_loss = max(loss_mine, loss_ref)
    yield (
        "reference-splitting-agreement",
        worst_loss < 1e-4,
        f"worst cross-objective optimality loss {worst_loss:.3e}",
    )


def cmd_verify(args: argparse.Namespace) -> int:
    problem, settings = load_problem(args.problem)
    seed = _seed_from(args)
    all_ok = True
    for name, ok, detail in _verify_checks(problem, settings, seed):
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all_ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tinysocp",
        description="Embedded-scale conic MPC: solve, simulate, bench, codegen, verify.",
    )
    parser.add_argument("--version", action="version", version=f"tinysocp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem file once")
    p.add_argument("--problem", required=True, help="problem file (tinysocp-problem-v1)")
    p.add_argument("--x0", required=True, help="initial state, comma-separated")
    p.add_argument("--xref", help="state reference table, headerless CSV, N rows x n cols")
    p.add_argument("--uref", help="input reference table, headerless CSV, N-1 rows x m cols")
    p.add_argument("--out", help="write the stage trajectory table here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="closed-loop scenario under an iteration budget")
    p.add_argument("--scenario", required=True, choices=sorted(_SCENARIOS))
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--cold-start", action="store_true", help="zero the workspace every step")
    p.add_argument("--out", help="write the closed-loop trajectory table here")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="sweep a dimension, record time and footprint")
    p.add_argument("--suite", required=True, choices=["safety-filter", "rocket"])
    p.add_argument("--sweep", required=True, choices=["state", "horizon"])
    p.add_argument("--range", required=True, help="A..B inclusive integer range")
    p.add_argument("--iters", type=int, default=30, help="iterations per timing sample")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="write the sweep table here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("codegen", help="emit a standalone solver source tree")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--precision", choices=["f32", "f64"], default="f32")
    p.set_defaults(func=cmd_codegen)

    p = sub.add_parser("verify", help="run the oracle suite against a problem file")
    p.add_argument("--problem", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, ValidationError, RiccatiError, ValueError) as exc:
        # the class name is part of the contract: boundary layers map it 1:1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
