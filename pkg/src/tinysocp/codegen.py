"""Emission of a standalone, static-memory C++ solver source tree.

The generated tree bakes one validated problem (dynamics, cache, bounds,
cones, linear costs, settings) into constant arrays and emits the solve
loop with every dimension a compile-time constant. Properties the tree is
tested against:

* no dynamic allocation anywhere, no division outside the cone projection,
* compiles warning-free under strict flags,
* at 64-bit precision, iterates match the library solver bit for bit,
  because both sides accumulate every reduction in the same fixed order
  and the build disables floating-point contraction,
* regeneration from identical inputs is byte-identical.

Constants are written as hexadecimal floating literals, which round-trip
exactly; infinite bounds become HUGE_VAL / HUGE_VALF. The initial state
and the linear cost rows stay mutable so a host can retarget the solver
between solves without regenerating.
"""

from __future__ import annotations

import math
import re
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._version import __version__
from .problem import (
    ProblemDefinition,
    Settings,
    ValidatedProblem,
    validate,
)
from .riccati import SolverCache

__all__ = [
    "CodegenError",
    "IoError",
    "UnsupportedDimensions",
    "GeneratedTree",
    "generate",
    "estimate_footprint",
    "footprint_breakdown",
    "audit_generated_tree",
    "build_command",
    "compile_generated_tree",
    "run_generated_example",
    "run_generated_trace",
]


class CodegenError(Exception):
    """Base error for source emission and the build/run helpers."""


class IoError(CodegenError):
    """Filesystem failure while writing the tree."""


class UnsupportedDimensions(CodegenError):
    """The fixed-size tree would exceed the configured flash budget."""


@dataclass(frozen=True)
class GeneratedTree:
    out_dir: Path
    files: Tuple[str, ...]
    precision: str
    data_bytes: int
    workspace_bytes: int


_PRECISIONS = {
    "f32": ("float", 4, "HUGE_VALF"),
    "f64": ("double", 8, "HUGE_VAL"),
}

_TREE_FILES = (
    "solver/tiny_types.hpp",
    "solver/tiny_projection.hpp",
    "solver/tiny_projection.cpp",
    "solver/tiny_solver.hpp",
    "solver/tiny_solver.cpp",
    "src/data_workspace.hpp",
    "src/data_workspace.cpp",
    "src/main_example.cpp",
    "manifest.txt",
)

_INT_BYTES = 4


def _as_validated(problem: Union[ProblemDefinition, ValidatedProblem]) -> ValidatedProblem:
    if isinstance(problem, ValidatedProblem):
        return problem
    return validate(problem)


def _effective_constraints(vp: ValidatedProblem, settings: Settings):
    """Constraint families the generated tree will actually enforce.

    Families switched off in the settings are dropped entirely: they cost
    no flash, no RAM, and no instructions in the emitted tree.
    """
    con = vp.constraints
    has_xb = vp.has_state_bounds and settings.en_state_bound
    has_ub = vp.has_input_bounds and settings.en_input_bound
    xcones = con.state_cones if settings.en_state_soc else ()
    ucones = con.input_cones if settings.en_input_soc else ()
    return has_xb, has_ub, xcones, ucones


def footprint_breakdown(
    problem: Union[ProblemDefinition, ValidatedProblem],
    precision: str = "f32",
    settings: Optional[Settings] = None,
) -> Dict[str, int]:
    """Per-component byte counts of the generated tree's static storage.

    Scalar counts follow the declared layout exactly; integers (cone
    tables, iteration counters, status) are 4 bytes each. Struct padding
    is not modeled.
    """
    if precision not in _PRECISIONS:
        raise ValueError(f"precision must be one of {sorted(_PRECISIONS)}")
    vp = _as_validated(problem)
    st = settings if settings is not None else Settings()
    sbytes = _PRECISIONS[precision][1]
    n, m, N = vp.dims.n, vp.dims.m, vp.dims.N
    has_xb, has_ub, xcones, ucones = _effective_constraints(vp, st)

    matrices = 4 * n * n + 2 * n * m + 2 * m * m  # A, Pinf, C2, Q; B, Kinf; C1, R
    vectors = 2 * n + m  # c, C4; C3
    bounds = (2 * n if has_xb else 0) + (2 * m if has_ub else 0)
    linear_costs = N * n + (N - 1) * m  # mutable q/r rows with baked initializers
    mutable_x0 = n
    settings_scalars = 3  # rho, pri tol, dua tol
    data_scalars = matrices + vectors + bounds + linear_costs + mutable_x0 + settings_scalars
    cone_ints = 2 * (len(xcones) + len(ucones))
    settings_ints = 2  # max_iter, check_termination
    data_bytes = sbytes * data_scalars + _INT_BYTES * (cone_ints + settings_ints)

    stage_n = 6 * N * n  # x, z, z_prev, y, p, qt
    stage_m = 6 * (N - 1) * m  # u, w, w_prev, g, d, rt
    scratch = 2 * n + 2 * m
    residuals = 2
    workspace_scalars = stage_n + stage_m + scratch + residuals
    workspace_bytes = sbytes * workspace_scalars + _INT_BYTES * 2  # iterations, status

    return {
        "scalar_bytes": sbytes,
        "matrices": sbytes * matrices,
        "vectors": sbytes * vectors,
        "bounds": sbytes * bounds,
        "linear_costs": sbytes * linear_costs,
        "x0": sbytes * mutable_x0,
        "settings": sbytes * settings_scalars + _INT_BYTES * settings_ints,
        "cone_tables": _INT_BYTES * cone_ints,
        "data_bytes": data_bytes,
        "workspace_bytes": workspace_bytes,
    }


def estimate_footprint(
    problem: Union[ProblemDefinition, ValidatedProblem],
    precision: str = "f32",
    settings: Optional[Settings] = None,
) -> Tuple[int, int]:
    """Closed-form (data_bytes, workspace_bytes) of the generated tree."""
    b = footprint_breakdown(problem, precision, settings)
    return b["data_bytes"], b["workspace_bytes"]


def _lit(value: float, precision: str) -> str:
    """One scalar as an exact C++ literal for the target precision."""
    if precision == "f64":
        v = float(value)
        if math.isinf(v):
            return "HUGE_VAL" if v > 0 else "-HUGE_VAL"
        return v.hex()
    v = float(np.float32(value))
    if math.isinf(v):
        return "HUGE_VALF" if v > 0 else "-HUGE_VALF"
    return v.hex() + "f"


def _array_lines(name: str, values: Sequence[float], precision: str, per_line: int = 4) -> str:
    lits = [_lit(v, precision) for v in values]
    rows = []
    for i in range(0, len(lits), per_line):
        rows.append("    " + ", ".join(lits[i : i + per_line]) + ",")
    body = "\n".join(rows)
    return f"const Scalar {name}[] = {{\n{body}\n}};"


def _int_array(name: str, values: Sequence[int]) -> str:
    body = ", ".join(str(int(v)) for v in values)
    return f"const int {name}[] = {{{body}}};"


def _types_header(n: int, m: int, N: int, ctype: str) -> str:
    return f"""#pragma once

// Fixed-size types for the generated solver. Every dimension is a
// compile-time constant; nothing in this tree allocates.

using Scalar = {ctype};

inline constexpr int kStates = {n};
inline constexpr int kInputs = {m};
inline constexpr int kHorizon = {N};

struct Workspace {{
    Scalar x[kHorizon][kStates];
    Scalar u[kHorizon - 1][kInputs];
    Scalar z[kHorizon][kStates];
    Scalar w[kHorizon - 1][kInputs];
    Scalar z_prev[kHorizon][kStates];
    Scalar w_prev[kHorizon - 1][kInputs];
    Scalar y[kHorizon][kStates];
    Scalar g[kHorizon - 1][kInputs];
    Scalar p[kHorizon][kStates];
    Scalar d[kHorizon - 1][kInputs];
    Scalar qt[kHorizon][kStates];
    Scalar rt[kHorizon - 1][kInputs];
    Scalar scr_n[kStates];
    Scalar scr_n2[kStates];
    Scalar scr_m[kInputs];
    Scalar scr_m2[kInputs];
    Scalar pri_res;
    Scalar dua_res;
    int iterations;
    int status;  // 0 unsolved, 1 solved, 2 budget exhausted
}};

struct Solver {{
    Workspace* work;
}};
"""


_PROJECTION_HEADER = """#pragma once

#include "solver/tiny_types.hpp"

// Euclidean projection of seg[0..length-1] onto the cone
// norm(seg[0..length-2]) <= seg[length-1], in place. This routine is the
// only place in the generated tree that divides.
void project_soc_in_place(Scalar* seg, int length);
"""

_PROJECTION_SOURCE = """#include "solver/tiny_projection.hpp"

#include <cmath>

void project_soc_in_place(Scalar* seg, int length) {
    const int last = length - 1;
    const Scalar a = seg[last];
    Scalar ss = seg[0] * seg[0];
    for (int i = 1; i < last; ++i) {
        ss = ss + seg[i] * seg[i];
    }
    const Scalar vnorm = std::sqrt(ss);
    if (vnorm <= a) {
        return;
    }
    if (vnorm <= -a) {
        for (int i = 0; i <= last; ++i) {
            seg[i] = Scalar(0);
        }
        return;
    }
    const Scalar scale = Scalar(0.5) * (Scalar(1) + a / vnorm);
    for (int i = 0; i < last; ++i) {
        seg[i] = scale * seg[i];
    }
    seg[last] = scale * vnorm;
}
"""

_SOLVER_HEADER = """#pragma once

#include "solver/tiny_types.hpp"

// Entry points. tiny_solve runs the splitting iteration to tolerance or
// budget and returns the final status; tiny_iterate advances exactly one
// iteration; the set_ functions retarget the mutable problem inputs
// between solves without regeneration.
int tiny_solve(Solver* solver);
void tiny_iterate(Solver* solver);
void tiny_compute_residuals(Solver* solver);
void tiny_set_x0(const Scalar* x0_new);
void tiny_set_xref(const Scalar (*x_ref)[kStates]);
void tiny_set_uref(const Scalar (*u_ref)[kInputs]);
"""


def _solver_source(
    has_xb: bool,
    has_ub: bool,
    n_xcones: int,
    n_ucones: int,
    check_termination: int,
) -> str:
    """The solve loop with constraint blocks resolved at generation time.

    Reduction order in the kernels matches the library exactly: matrix
    products accumulate per output element in ascending index order, and
    every elementwise chain keeps the library's operation order, so with
    contraction disabled the iterates agree bit for bit at 64-bit.
    """
    parts: List[str] = []
    parts.append(
        """#include "solver/tiny_solver.hpp"

#include "solver/tiny_projection.hpp"
#include "src/data_workspace.hpp"

namespace {

void matvec(const Scalar* a, const Scalar* x, Scalar* out, int rows, int cols) {
    for (int i = 0; i < rows; ++i) {
        Scalar acc = a[i * cols] * x[0];
        for (int j = 1; j < cols; ++j) {
            acc = acc + a[i * cols + j] * x[j];
        }
        out[i] = acc;
    }
}

void matvec_t(const Scalar* a, const Scalar* x, Scalar* out, int rows, int cols) {
    for (int i = 0; i < cols; ++i) {
        Scalar acc = a[i] * x[0];
        for (int j = 1; j < rows; ++j) {
            acc = acc + a[j * cols + i] * x[j];
        }
        out[i] = acc;
    }
}

void update_linear_costs(Workspace* w) {
    for (int k = 0; k < kHorizon; ++k) {
        for (int i = 0; i < kStates; ++i) {
            w->qt[k][i] = (w->y[k][i] - w->z[k][i]) * kRho + q_lin[k][i];
        }
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        for (int i = 0; i < kInputs; ++i) {
            w->rt[k][i] = (w->g[k][i] - w->w[k][i]) * kRho + r_lin[k][i];
        }
    }
}

void backward_pass(Workspace* w) {
    for (int i = 0; i < kStates; ++i) {
        w->p[kHorizon - 1][i] = w->qt[kHorizon - 1][i];
    }
    for (int k = kHorizon - 2; k >= 0; --k) {
        matvec_t(kB, w->p[k + 1], w->scr_m, kStates, kInputs);
        for (int i = 0; i < kInputs; ++i) {
            w->scr_m[i] = (w->scr_m[i] + w->rt[k][i]) + kC3[i];
        }
        matvec(kC1, w->scr_m, w->d[k], kInputs, kInputs);
        matvec(kC2, w->p[k + 1], w->p[k], kStates, kStates);
        matvec_t(kKinf, w->rt[k], w->scr_n, kInputs, kStates);
        for (int i = 0; i < kStates; ++i) {
            w->p[k][i] = ((w->p[k][i] - w->scr_n[i]) + w->qt[k][i]) + kC4[i];
        }
    }
}

void forward_pass(Workspace* w) {
    for (int i = 0; i < kStates; ++i) {
        w->x[0][i] = x0[i];
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        matvec(kKinf, w->x[k], w->u[k], kInputs, kStates);
        for (int i = 0; i < kInputs; ++i) {
            w->u[k][i] = -(w->u[k][i] + w->d[k][i]);
        }
        matvec(kA, w->x[k], w->x[k + 1], kStates, kStates);
        matvec(kB, w->u[k], w->scr_n, kStates, kInputs);
        for (int i = 0; i < kStates; ++i) {
            w->x[k + 1][i] = (w->x[k + 1][i] + w->scr_n[i]) + kC[i];
        }
    }
}
"""
    )

    slack = ["""void slack_update(Workspace* w) {
    for (int k = 0; k < kHorizon; ++k) {
        for (int i = 0; i < kStates; ++i) {
            w->z_prev[k][i] = w->z[k][i];
            w->z[k][i] = w->x[k][i] + w->y[k][i];
        }
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        for (int i = 0; i < kInputs; ++i) {
            w->w_prev[k][i] = w->w[k][i];
            w->w[k][i] = w->u[k][i] + w->g[k][i];
        }
    }"""]
    if has_xb:
        slack.append(
            """    for (int k = 0; k < kHorizon; ++k) {
        for (int i = 0; i < kStates; ++i) {
            Scalar v = w->z[k][i];
            v = v > kXmax[i] ? kXmax[i] : v;
            v = v < kXmin[i] ? kXmin[i] : v;
            w->z[k][i] = v;
        }
    }"""
        )
    for ci in range(n_xcones):
        slack.append(
            f"""    for (int k = 0; k < kHorizon; ++k) {{
        project_soc_in_place(&w->z[k][kStateConeStart[{ci}]], kStateConeLen[{ci}]);
    }}"""
        )
    if has_ub:
        slack.append(
            """    for (int k = 0; k < kHorizon - 1; ++k) {
        for (int i = 0; i < kInputs; ++i) {
            Scalar v = w->w[k][i];
            v = v > kUmax[i] ? kUmax[i] : v;
            v = v < kUmin[i] ? kUmin[i] : v;
            w->w[k][i] = v;
        }
    }"""
        )
    for ci in range(n_ucones):
        slack.append(
            f"""    for (int k = 0; k < kHorizon - 1; ++k) {{
        project_soc_in_place(&w->w[k][kInputConeStart[{ci}]], kInputConeLen[{ci}]);
    }}"""
        )
    slack.append("}")
    parts.append("\n".join(slack))

    parts.append(
        """
void dual_update(Workspace* w) {
    for (int k = 0; k < kHorizon; ++k) {
        for (int i = 0; i < kStates; ++i) {
            w->y[k][i] = w->y[k][i] + (w->x[k][i] - w->z[k][i]);
        }
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        for (int i = 0; i < kInputs; ++i) {
            w->g[k][i] = w->g[k][i] + (w->u[k][i] - w->w[k][i]);
        }
    }
}

void compute_residuals(Workspace* w) {
    Scalar pri = Scalar(0);
    Scalar dua = Scalar(0);
    for (int k = 0; k < kHorizon; ++k) {
        for (int i = 0; i < kStates; ++i) {
            Scalar v = w->x[k][i] - w->z[k][i];
            v = v < Scalar(0) ? -v : v;
            pri = v > pri ? v : pri;
            Scalar s = w->z[k][i] - w->z_prev[k][i];
            s = s < Scalar(0) ? -s : s;
            dua = s > dua ? s : dua;
        }
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        for (int i = 0; i < kInputs; ++i) {
            Scalar v = w->u[k][i] - w->w[k][i];
            v = v < Scalar(0) ? -v : v;
            pri = v > pri ? v : pri;
            Scalar s = w->w[k][i] - w->w_prev[k][i];
            s = s < Scalar(0) ? -s : s;
            dua = s > dua ? s : dua;
        }
    }
    w->pri_res = pri;
    w->dua_res = kRho * dua;
}

void iterate_once(Workspace* w) {
    update_linear_costs(w);
    backward_pass(w);
    forward_pass(w);
    slack_update(w);
    dual_update(w);
}

}  // namespace

void tiny_iterate(Solver* solver) {
    iterate_once(solver->work);
}

void tiny_compute_residuals(Solver* solver) {
    compute_residuals(solver->work);
}
"""
    )

    if check_termination > 0:
        parts.append(
            """int tiny_solve(Solver* solver) {
    Workspace* w = solver->work;
    w->status = 0;
    int solved = 0;
    int countdown = kCheckTermination;
    for (int it = 1; it <= kMaxIter; ++it) {
        iterate_once(w);
        w->iterations = it;
        --countdown;
        if (countdown == 0) {
            countdown = kCheckTermination;
            compute_residuals(w);
            if (w->pri_res < kPriTol && w->dua_res < kDuaTol) {
                solved = 1;
                break;
            }
        }
    }
    if (solved == 1) {
        w->status = 1;
    } else {
        compute_residuals(w);
        w->status = 2;
    }
    return w->status;
}
"""
        )
    else:
        parts.append(
            """int tiny_solve(Solver* solver) {
    Workspace* w = solver->work;
    w->status = 0;
    for (int it = 1; it <= kMaxIter; ++it) {
        iterate_once(w);
        w->iterations = it;
    }
    compute_residuals(w);
    w->status = 2;
    return w->status;
}
"""
        )

    parts.append(
        """void tiny_set_x0(const Scalar* x0_new) {
    for (int i = 0; i < kStates; ++i) {
        x0[i] = x0_new[i];
    }
}

void tiny_set_xref(const Scalar (*x_ref)[kStates]) {
    for (int k = 0; k < kHorizon - 1; ++k) {
        matvec(kQ, x_ref[k], q_lin[k], kStates, kStates);
        for (int i = 0; i < kStates; ++i) {
            q_lin[k][i] = -q_lin[k][i];
        }
    }
    matvec(kPinf, x_ref[kHorizon - 1], q_lin[kHorizon - 1], kStates, kStates);
    for (int i = 0; i < kStates; ++i) {
        q_lin[kHorizon - 1][i] = -q_lin[kHorizon - 1][i];
    }
}

void tiny_set_uref(const Scalar (*u_ref)[kInputs]) {
    for (int k = 0; k < kHorizon - 1; ++k) {
        matvec(kR, u_ref[k], r_lin[k], kInputs, kInputs);
        for (int i = 0; i < kInputs; ++i) {
            r_lin[k][i] = -r_lin[k][i];
        }
    }
}
"""
    )
    return "\n".join(parts)


def _data_header(
    has_xb: bool,
    has_ub: bool,
    n_xcones: int,
    n_ucones: int,
    settings: Settings,
    precision: str,
) -> str:
    lines = [
        "#pragma once",
        "",
        "#include <cmath>",
        "",
        '#include "solver/tiny_types.hpp"',
        "",
        "// Problem data baked at generation time. The solve settings are",
        "// compile-time constants; x0, q_lin, and r_lin are mutable so a host",
        "// can retarget the solver between solves.",
        "",
        f"inline constexpr Scalar kRho = {_lit(settings.rho, precision)};",
        f"inline constexpr Scalar kPriTol = {_lit(settings.abs_pri_tol, precision)};",
        f"inline constexpr Scalar kDuaTol = {_lit(settings.abs_dua_tol, precision)};",
        f"inline constexpr int kMaxIter = {settings.max_iter};",
        f"inline constexpr int kCheckTermination = {settings.check_termination};",
        "",
        "extern const Scalar kA[kStates * kStates];",
        "extern const Scalar kB[kStates * kInputs];",
        "extern const Scalar kC[kStates];",
        "extern const Scalar kQ[kStates * kStates];",
        "extern const Scalar kR[kInputs * kInputs];",
        "extern const Scalar kKinf[kInputs * kStates];",
        "extern const Scalar kPinf[kStates * kStates];",
        "extern const Scalar kC1[kInputs * kInputs];",
        "extern const Scalar kC2[kStates * kStates];",
        "extern const Scalar kC3[kInputs];",
        "extern const Scalar kC4[kStates];",
    ]
    if has_xb:
        lines += [
            "extern const Scalar kXmin[kStates];",
            "extern const Scalar kXmax[kStates];",
        ]
    if has_ub:
        lines += [
            "extern const Scalar kUmin[kInputs];",
            "extern const Scalar kUmax[kInputs];",
        ]
    if n_xcones:
        lines += [
            f"inline constexpr int kStateConeCount = {n_xcones};",
            "extern const int kStateConeStart[kStateConeCount];",
            "extern const int kStateConeLen[kStateConeCount];",
        ]
    if n_ucones:
        lines += [
            f"inline constexpr int kInputConeCount = {n_ucones};",
            "extern const int kInputConeStart[kInputConeCount];",
            "extern const int kInputConeLen[kInputConeCount];",
        ]
    lines += [
        "",
        "extern Scalar x0[kStates];",
        "extern Scalar q_lin[kHorizon][kStates];",
        "extern Scalar r_lin[kHorizon - 1][kInputs];",
        "",
        "extern Workspace workspace;",
        "extern Solver solver;",
        "",
    ]
    return "\n".join(lines)


def _stage_array(name: str, rows: np.ndarray, precision: str, dim_name: str, count_expr: str) -> str:
    body_rows = []
    for r in np.asarray(rows):
        lits = ", ".join(_lit(v, precision) for v in r)
        body_rows.append(f"    {{{lits}}},")
    body = "\n".join(body_rows)
    return f"Scalar {name}[{count_expr}][{dim_name}] = {{\n{body}\n}};"


def _data_source(
    vp: ValidatedProblem,
    cache: SolverCache,
    x0: np.ndarray,
    has_xb: bool,
    has_ub: bool,
    xcones,
    ucones,
    precision: str,
) -> str:
    con = vp.constraints
    chunks = [
        '#include "src/data_workspace.hpp"',
        "",
        _array_lines("kA", vp.dynamics.A.ravel(), precision),
        _array_lines("kB", vp.dynamics.B.ravel(), precision),
        _array_lines("kC", vp.dynamics.c.ravel(), precision),
        _array_lines("kQ", vp.cost.Q.ravel(), precision),
        _array_lines("kR", vp.cost.R.ravel(), precision),
        _array_lines("kKinf", cache.Kinf.ravel(), precision),
        _array_lines("kPinf", cache.Pinf.ravel(), precision),
        _array_lines("kC1", cache.C1.ravel(), precision),
        _array_lines("kC2", cache.C2.ravel(), precision),
        _array_lines("kC3", cache.C3.ravel(), precision),
        _array_lines("kC4", cache.C4.ravel(), precision),
    ]
    if has_xb:
        chunks.append(_array_lines("kXmin", con.x_min.ravel(), precision))
        chunks.append(_array_lines("kXmax", con.x_max.ravel(), precision))
    if has_ub:
        chunks.append(_array_lines("kUmin", con.u_min.ravel(), precision))
        chunks.append(_array_lines("kUmax", con.u_max.ravel(), precision))
    if xcones:
        chunks.append(_int_array("kStateConeStart", [cn.start for cn in xcones]))
        chunks.append(_int_array("kStateConeLen", [cn.len for cn in xcones]))
    if ucones:
        chunks.append(_int_array("kInputConeStart", [cn.start for cn in ucones]))
        chunks.append(_int_array("kInputConeLen", [cn.len for cn in ucones]))
    x0_lits = ", ".join(_lit(v, precision) for v in x0)
    chunks.append(f"Scalar x0[kStates] = {{{x0_lits}}};")
    chunks.append(_stage_array("q_lin", vp.cost.q, precision, "kStates", "kHorizon"))
    chunks.append(_stage_array("r_lin", vp.cost.r, precision, "kInputs", "kHorizon - 1"))
    chunks.append("")
    chunks.append("Workspace workspace;")
    chunks.append("Solver solver = {&workspace};")
    chunks.append("")
    return "\n\n".join(chunks)


_MAIN_SOURCE = """#include <cstdio>
#include <cstring>

#include "solver/tiny_solver.hpp"
#include "src/data_workspace.hpp"

namespace {

void print_row(const char* name, int k, const Scalar* row, int len) {
    std::printf("%s %d", name, k);
    for (int i = 0; i < len; ++i) {
        std::printf(" %a", static_cast<double>(row[i]));
    }
    std::printf("\\n");
}

void dump_state(const Workspace* w, int it) {
    std::printf("iter %d\\n", it);
    for (int k = 0; k < kHorizon; ++k) {
        print_row("x", k, w->x[k], kStates);
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        print_row("u", k, w->u[k], kInputs);
    }
    for (int k = 0; k < kHorizon; ++k) {
        print_row("z", k, w->z[k], kStates);
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        print_row("w", k, w->w[k], kInputs);
    }
    for (int k = 0; k < kHorizon; ++k) {
        print_row("y", k, w->y[k], kStates);
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        print_row("g", k, w->g[k], kInputs);
    }
    for (int k = 0; k < kHorizon; ++k) {
        print_row("p", k, w->p[k], kStates);
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        print_row("d", k, w->d[k], kInputs);
    }
}

}  // namespace

int main(int argc, char** argv) {
    const bool trace = argc > 1 && std::strcmp(argv[1], "trace") == 0;
    if (trace) {
        for (int it = 1; it <= kMaxIter; ++it) {
            tiny_iterate(&solver);
            dump_state(solver.work, it);
        }
        return 0;
    }
    const int status = tiny_solve(&solver);
    std::printf("status=%d iterations=%d pri_res=%a dua_res=%a\\n", status,
                solver.work->iterations,
                static_cast<double>(solver.work->pri_res),
                static_cast<double>(solver.work->dua_res));
    for (int k = 0; k < kHorizon; ++k) {
        print_row("x", k, solver.work->x[k], kStates);
    }
    for (int k = 0; k < kHorizon - 1; ++k) {
        print_row("u", k, solver.work->u[k], kInputs);
    }
    return status == 1 ? 0 : 2;
}
"""


def _manifest(
    vp: ValidatedProblem,
    settings: Settings,
    precision: str,
    breakdown: Dict[str, int],
    has_xb: bool,
    has_ub: bool,
    xcones,
    ucones,
) -> str:
    n, m, N = vp.dims.n, vp.dims.m, vp.dims.N
    sbytes = breakdown["scalar_bytes"]
    xb = "2n" if has_xb else "0"
    ub = "2m" if has_ub else "0"
    cones = 2 * (len(xcones) + len(ucones))
    lines = [
        "tinysocp generated solver manifest",
        f"generator_version: {__version__}",
        f"precision: {precision} ({sbytes}-byte scalar)",
        f"dims: n={n} m={m} N={N}",
        (
            f"constraints: state_bounds={'yes' if has_xb else 'no'} "
            f"input_bounds={'yes' if has_ub else 'no'} "
            f"state_cones={len(xcones)} input_cones={len(ucones)}"
        ),
        (
            f"settings: rho={settings.rho!r} abs_pri_tol={settings.abs_pri_tol!r} "
            f"abs_dua_tol={settings.abs_dua_tol!r} max_iter={settings.max_iter} "
            f"check_termination={settings.check_termination}"
        ),
        f"data_bytes: {breakdown['data_bytes']}",
        f"workspace_bytes: {breakdown['workspace_bytes']}",
        (
            f"footprint_formula: data = {sbytes}*(4n^2 + 2nm + 2m^2 + 2n + m + {xb} + {ub}"
            f" + N*n + (N-1)*m + n + 3) + 4*({cones} + 2);"
            f" workspace = {sbytes}*(6Nn + 6(N-1)m + 2n + 2m + 2) + 8"
            " (padding not modeled)"
        ),
        "build: g++ -std=c++17 -O2 -ffp-contract=off -Wall -Wextra -Wpedantic"
        " -Werror -I <out_dir> <out_dir>/solver/*.cpp <out_dir>/src/*.cpp -o tiny_example",
        "run: ./tiny_example        (one solve; exit 0 solved, 2 budget exhausted)",
        "run: ./tiny_example trace  (fixed iterations, full iterate dump, hex floats)",
        "files:",
    ]
    for f in _TREE_FILES:
        lines.append(f"  {f}")
    return "\n".join(lines) + "\n"


def generate(
    problem: Union[ProblemDefinition, ValidatedProblem],
    cache: SolverCache,
    settings: Settings,
    out_dir: Union[str, Path],
    precision: str = "f32",
    x0: Optional[np.ndarray] = None,
    flash_budget_bytes: Optional[int] = None,
) -> GeneratedTree:
    """Write the standalone solver tree for one problem.

    The emission is a pure function of its inputs: regenerating with the
    same problem, cache, settings, precision, and x0 writes byte-identical
    files. ``x0`` sets the initial value of the mutable state (zeros when
    omitted); ``flash_budget_bytes`` turns the advisory footprint estimate
    into a hard error when the data section would not fit.
    """
    if precision not in _PRECISIONS:
        raise ValueError(f"precision must be one of {sorted(_PRECISIONS)}")
    vp = _as_validated(problem)
    if cache.rho != settings.rho:
        raise ValueError(
            f"cache was built for rho={cache.rho:g} but settings ask for rho={settings.rho:g}"
        )
    n, m, N = vp.dims.n, vp.dims.m, vp.dims.N
    if x0 is None:
        x0 = np.zeros(n)
    else:
        x0 = np.asarray(x0, dtype=np.float64).reshape(n)
    breakdown = footprint_breakdown(vp, precision, settings)
    if flash_budget_bytes is not None and breakdown["data_bytes"] > flash_budget_bytes:
        raise UnsupportedDimensions(
            f"data section needs {breakdown['data_bytes']} bytes, "
            f"budget is {flash_budget_bytes}"
        )
    has_xb, has_ub, xcones, ucones = _effective_constraints(vp, settings)
    ctype = _PRECISIONS[precision][0]

    content = {
        "solver/tiny_types.hpp": _types_header(n, m, N, ctype),
        "solver/tiny_projection.hpp": _PROJECTION_HEADER,
        "solver/tiny_projection.cpp": _PROJECTION_SOURCE,
        "solver/tiny_solver.hpp": _SOLVER_HEADER,
        "solver/tiny_solver.cpp": _solver_source(
            has_xb, has_ub, len(xcones), len(ucones), settings.check_termination
        ),
        "src/data_workspace.hpp": _data_header(
            has_xb, has_ub, len(xcones), len(ucones), settings, precision
        ),
        "src/data_workspace.cpp": _data_source(
            vp, cache, x0, has_xb, has_ub, xcones, ucones, precision
        ),
        "src/main_example.cpp": _MAIN_SOURCE,
        "manifest.txt": _manifest(
            vp, settings, precision, breakdown, has_xb, has_ub, xcones, ucones
        ),
    }
    out = Path(out_dir)
    try:
        (out / "solver").mkdir(parents=True, exist_ok=True)
        (out / "src").mkdir(parents=True, exist_ok=True)
        for rel, text in content.items():
            (out / rel).write_text(text)
    except OSError as exc:
        raise IoError(f"could not write generated tree under {out}: {exc}") from exc
    return GeneratedTree(
        out_dir=out,
        files=_TREE_FILES,
        precision=precision,
        data_bytes=breakdown["data_bytes"],
        workspace_bytes=breakdown["workspace_bytes"],
    )


_COMMENT_RE = re.compile(r"//[^\n]*|/\*.*?\*/", re.S)
_STRING_RE = re.compile(r'"(?:\\.|[^"\\])*"|\'(?:\\.|[^\'\\])*\'')
_ALLOC_RE = re.compile(
    r"\b(new|delete|malloc|calloc|realloc|free|alloca)\b"
    r"|std::vector|std::string|unique_ptr|shared_ptr|make_unique|make_shared"
)

_DIVISION_ALLOWED = "solver/tiny_projection.cpp"


def _strip_cpp(text: str) -> str:
    text = _COMMENT_RE.sub(" ", text)
    text = _STRING_RE.sub(" ", text)
    kept = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    return "\n".join(kept)


def audit_generated_tree(out_dir: Union[str, Path]) -> List[str]:
    """Lexical audit of an emitted tree; returns violations (empty = clean).

    Checks, over comment-, string-, and preprocessor-stripped sources:
    no division token outside the cone-projection unit, and no dynamic
    allocation constructs anywhere.
    """
    out = Path(out_dir)
    violations: List[str] = []
    sources = sorted(out.glob("solver/*")) + sorted(out.glob("src/*"))
    for path in sources:
        if path.suffix not in (".hpp", ".cpp"):
            violations.append(f"{path.name}: unexpected file type")
            continue
        rel = f"{path.parent.name}/{path.name}"
        stripped = _strip_cpp(path.read_text())
        if "/" in stripped and rel != _DIVISION_ALLOWED:
            violations.append(f"{rel}: division operator outside the projection unit")
        hit = _ALLOC_RE.search(stripped)
        if hit:
            violations.append(f"{rel}: dynamic allocation construct {hit.group(0)!r}")
    return violations


def build_command(out_dir: Union[str, Path], compiler: str = "g++") -> List[str]:
    """Strict-flags compile command for an emitted tree."""
    out = Path(out_dir)
    srcs = sorted(str(p) for p in out.glob("solver/*.cpp"))
    srcs += sorted(str(p) for p in out.glob("src/*.cpp"))
    return [
        compiler,
        "-std=c++17",
        "-O2",
        "-ffp-contract=off",
        "-Wall",
        "-Wextra",
        "-Wpedantic",
        "-Werror",
        "-I",
        str(out),
        *srcs,
        "-o",
        str(out / "tiny_example"),
    ]


def compile_generated_tree(out_dir: Union[str, Path], compiler: str = "g++") -> Path:
    """Compile the tree under -Werror; returns the binary path.

    Raises CodegenError with the compiler output on any failure, which
    includes any warning because of -Werror.
    """
    cmd = build_command(out_dir, compiler)
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CodegenError(
            f"generated tree failed to compile:\n{' '.join(cmd)}\n{proc.stderr}"
        )
    if proc.stderr.strip():
        raise CodegenError(f"compiler emitted diagnostics:\n{proc.stderr}")
    return Path(out_dir) / "tiny_example"


def _parse_rows(lines: List[str], name: str, count: int, width: int) -> np.ndarray:
    rows = np.empty((count, width))
    taken = 0
    for ln in lines:
        parts = ln.split()
        if parts and parts[0] == name:
            k = int(parts[1])
            rows[k] = [float.fromhex(tok) for tok in parts[2 : 2 + width]]
            taken += 1
    if taken != count:
        raise CodegenError(f"expected {count} '{name}' rows, parsed {taken}")
    return rows


def run_generated_example(binary: Union[str, Path], n: int, m: int, N: int) -> Dict[str, object]:
    """Run the emitted example binary and parse its solve report."""
    proc = subprocess.run([str(binary)], capture_output=True, text=True)
    if proc.returncode not in (0, 2):
        raise CodegenError(
            f"example binary exited with {proc.returncode}:\n{proc.stderr}"
        )
    lines = proc.stdout.splitlines()
    head = lines[0]
    fields = dict(part.split("=", 1) for part in head.split())
    return {
        "status": int(fields["status"]),
        "iterations": int(fields["iterations"]),
        "pri_res": float.fromhex(fields["pri_res"]),
        "dua_res": float.fromhex(fields["dua_res"]),
        "x": _parse_rows(lines[1:], "x", N, n),
        "u": _parse_rows(lines[1:], "u", N - 1, m),
        "exit_code": proc.returncode,
    }


def run_generated_trace(
    binary: Union[str, Path], n: int, m: int, N: int, iters: int
) -> Dict[str, np.ndarray]:
    """Run the binary in trace mode; returns per-iteration iterate arrays.

    Keys x, z, y, p have shape (iters, N, n); u, w, g, d have shape
    (iters, N-1, m). Values are exact: the binary prints hex floats.
    """
    proc = subprocess.run([str(binary), "trace"], capture_output=True, text=True)
    if proc.returncode != 0:
        raise CodegenError(f"trace run exited with {proc.returncode}:\n{proc.stderr}")
    state_names = ("x", "z", "y", "p")
    input_names = ("u", "w", "g", "d")
    out = {nm: np.empty((iters, N, n)) for nm in state_names}
    out.update({nm: np.empty((iters, N - 1, m)) for nm in input_names})
    it = -1
    for ln in proc.stdout.splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "iter":
            it = int(parts[1]) - 1
            continue
        nm = parts[0]
        if nm in out and 0 <= it < iters:
            out[nm][it, int(parts[1])] = [float.fromhex(tok) for tok in parts[2:]]
    return out
