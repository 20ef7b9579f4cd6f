"""Problem definition files: structured text, schema "tinysocp-problem-v1".

The format is JSON with a fixed key layout:

* ``dims {n, m, N}``
* ``dynamics {A, B, c}`` as row-major nested arrays (``c`` optional, zeros)
* ``cost {Q, R}``
* ``constraints {x_min, x_max, u_min, u_max, state_cones, input_cones}``,
  cones as ``{start, len}`` objects; missing keys mean unconstrained
* ``settings {rho, abs_pri_tol, abs_dua_tol, max_iter, check_termination}``,
  optional, defaults applied per field

Bounds accept the strings ``"inf"`` and ``"-inf"``; everything else is
plain decimal. Errors name the offending key so a malformed file is
diagnosable from the message alone.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .problem import (
    ConeSlice,
    ConstraintSet,
    CostData,
    LinearDynamics,
    ProblemDefinition,
    ProblemDims,
    Settings,
)

__all__ = [
    "SCHEMA",
    "ProblemFileError",
    "load_problem",
    "save_problem",
    "problem_to_dict",
    "problem_from_dict",
    "atomic_write_text",
]

SCHEMA = "tinysocp-problem-v1"


class ProblemFileError(ValueError):
    """Malformed problem file; the message names the offending key."""


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write via a sibling temp file + rename, so readers never see a torn file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent or "."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _require(d: Dict[str, Any], key: str, where: str) -> Any:
    if key not in d:
        raise ProblemFileError(f"{where}.{key}: missing")
    return d[key]


def _check_keys(d: Any, allowed: Tuple[str, ...], where: str) -> None:
    if not isinstance(d, dict):
        raise ProblemFileError(f"{where}: expected an object")
    for key in d:
        if key not in allowed:
            raise ProblemFileError(f"{where}.{key}: unknown key")


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemFileError(f"{where}: expected an integer")
    return value


def _num(value: Any, where: str, bound: bool = False) -> float:
    if isinstance(value, str):
        if bound and value in ("inf", "-inf"):
            return math.inf if value == "inf" else -math.inf
        raise ProblemFileError(f'{where}: expected a number{" or inf/-inf" if bound else ""}')
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"{where}: expected a number")
    v = float(value)
    if math.isnan(v) or (math.isinf(v) and not bound):
        raise ProblemFileError(f"{where}: non-finite value")
    return v


def _vector(value: Any, length: int, where: str, bound: bool = False) -> np.ndarray:
    if not isinstance(value, list) or len(value) != length:
        raise ProblemFileError(f"{where}: expected a list of {length} numbers")
    return np.array([_num(v, f"{where}[{i}]", bound) for i, v in enumerate(value)])


def _matrix(value: Any, rows: int, cols: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise ProblemFileError(f"{where}: expected {rows} rows")
    out = np.empty((rows, cols))
    for i, row in enumerate(value):
        out[i] = _vector(row, cols, f"{where}[{i}]")
    return out


def _cones(value: Any, where: str) -> Tuple[ConeSlice, ...]:
    if not isinstance(value, list):
        raise ProblemFileError(f"{where}: expected a list of {{start, len}} objects")
    cones: List[ConeSlice] = []
    for i, item in enumerate(value):
        _check_keys(item, ("start", "len"), f"{where}[{i}]")
        start = _int(_require(item, "start", f"{where}[{i}]"), f"{where}[{i}].start")
        length = _int(_require(item, "len", f"{where}[{i}]"), f"{where}[{i}].len")
        if start < 0:
            raise ProblemFileError(f"{where}[{i}].start: must be nonnegative")
        if length < 2:
            raise ProblemFileError(f"{where}[{i}].len: a cone needs at least 2 coordinates")
        cones.append(ConeSlice(start=start, len=length))
    return tuple(cones)


def problem_from_dict(data: Any) -> Tuple[ProblemDefinition, Settings]:
    """Parse the schema layout; structural errors name the offending key."""
    _check_keys(data, ("schema", "dims", "dynamics", "cost", "constraints", "settings"), "top-level")
    schema = data.get("schema")
    if schema is not None and schema != SCHEMA:
        raise ProblemFileError(f'schema: expected "{SCHEMA}", got {schema!r}')

    dims_d = _require(data, "dims", "top-level")
    _check_keys(dims_d, ("n", "m", "N"), "dims")
    n = _int(_require(dims_d, "n", "dims"), "dims.n")
    m = _int(_require(dims_d, "m", "dims"), "dims.m")
    N = _int(_require(dims_d, "N", "dims"), "dims.N")
    if n < 1 or m < 1 or N < 2:
        raise ProblemFileError("dims: need n >= 1, m >= 1, N >= 2")

    dyn_d = _require(data, "dynamics", "top-level")
    _check_keys(dyn_d, ("A", "B", "c"), "dynamics")
    A = _matrix(_require(dyn_d, "A", "dynamics"), n, n, "dynamics.A")
    B = _matrix(_require(dyn_d, "B", "dynamics"), n, m, "dynamics.B")
    c = (
        _vector(dyn_d["c"], n, "dynamics.c")
        if "c" in dyn_d
        else np.zeros(n)
    )

    cost_d = _require(data, "cost", "top-level")
    _check_keys(cost_d, ("Q", "R", "q", "r"), "cost")
    Q = _matrix(_require(cost_d, "Q", "cost"), n, n, "cost.Q")
    R = _matrix(_require(cost_d, "R", "cost"), m, m, "cost.R")
    q_lin = _matrix(cost_d["q"], N, n, "cost.q") if "q" in cost_d else None
    r_lin = _matrix(cost_d["r"], N - 1, m, "cost.r") if "r" in cost_d else None

    con_d = data.get("constraints", {})
    _check_keys(
        con_d,
        ("x_min", "x_max", "u_min", "u_max", "state_cones", "input_cones"),
        "constraints",
    )
    constraints = ConstraintSet(
        x_min=_vector(con_d["x_min"], n, "constraints.x_min", bound=True)
        if "x_min" in con_d
        else None,
        x_max=_vector(con_d["x_max"], n, "constraints.x_max", bound=True)
        if "x_max" in con_d
        else None,
        u_min=_vector(con_d["u_min"], m, "constraints.u_min", bound=True)
        if "u_min" in con_d
        else None,
        u_max=_vector(con_d["u_max"], m, "constraints.u_max", bound=True)
        if "u_max" in con_d
        else None,
        state_cones=_cones(con_d.get("state_cones", []), "constraints.state_cones"),
        input_cones=_cones(con_d.get("input_cones", []), "constraints.input_cones"),
    )

    st_d = data.get("settings", {})
    _check_keys(
        st_d,
        ("rho", "abs_pri_tol", "abs_dua_tol", "max_iter", "check_termination"),
        "settings",
    )
    defaults = Settings()
    try:
        settings = Settings(
            rho=_num(st_d.get("rho", defaults.rho), "settings.rho"),
            abs_pri_tol=_num(st_d.get("abs_pri_tol", defaults.abs_pri_tol), "settings.abs_pri_tol"),
            abs_dua_tol=_num(st_d.get("abs_dua_tol", defaults.abs_dua_tol), "settings.abs_dua_tol"),
            max_iter=_int(st_d.get("max_iter", defaults.max_iter), "settings.max_iter"),
            check_termination=_int(
                st_d.get("check_termination", defaults.check_termination),
                "settings.check_termination",
            ),
        )
    except ValueError as exc:
        raise ProblemFileError(f"settings: {exc}") from exc

    problem = ProblemDefinition(
        dims=ProblemDims(n=n, m=m, N=N),
        dynamics=LinearDynamics(A=A, B=B, c=c),
        cost=CostData(Q=Q, R=R, q=q_lin, r=r_lin),
        constraints=constraints,
    )
    return problem, settings


def load_problem(path: Union[str, Path]) -> Tuple[ProblemDefinition, Settings]:
    """Read and parse one problem file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: not valid structured text ({exc})") from exc
    return problem_from_dict(data)


def _bound_list(vec: Optional[np.ndarray]) -> Optional[List[Any]]:
    if vec is None:
        return None
    out: List[Any] = []
    for v in vec:
        if math.isinf(v):
            out.append("inf" if v > 0 else "-inf")
        else:
            out.append(float(v))
    return out


def problem_to_dict(
    problem: ProblemDefinition, settings: Optional[Settings] = None
) -> Dict[str, Any]:
    """Schema layout for one problem; omits absent constraint families."""
    dims = problem.dims
    con = problem.constraints
    constraints: Dict[str, Any] = {}
    for key, vec in (
        ("x_min", con.x_min),
        ("x_max", con.x_max),
        ("u_min", con.u_min),
        ("u_max", con.u_max),
    ):
        as_list = _bound_list(None if vec is None else np.asarray(vec, dtype=np.float64))
        if as_list is not None:
            constraints[key] = as_list
    if con.state_cones:
        constraints["state_cones"] = [
            {"start": cn.start, "len": cn.len} for cn in con.state_cones
        ]
    if con.input_cones:
        constraints["input_cones"] = [
            {"start": cn.start, "len": cn.len} for cn in con.input_cones
        ]
    data: Dict[str, Any] = {
        "schema": SCHEMA,
        "dims": {"n": dims.n, "m": dims.m, "N": dims.N},
        "dynamics": {
            "A": np.asarray(problem.dynamics.A, dtype=np.float64).tolist(),
            "B": np.asarray(problem.dynamics.B, dtype=np.float64).tolist(),
            "c": np.asarray(problem.dynamics.c, dtype=np.float64).tolist()
            if problem.dynamics.c is not None
            else [0.0] * dims.n,
        },
        "cost": {
            "Q": np.asarray(problem.cost.Q, dtype=np.float64).tolist(),
            "R": np.asarray(problem.cost.R, dtype=np.float64).tolist(),
        },
        "constraints": constraints,
    }
    if problem.cost.q is not None:
        data["cost"]["q"] = np.asarray(problem.cost.q, dtype=np.float64).tolist()
    if problem.cost.r is not None:
        data["cost"]["r"] = np.asarray(problem.cost.r, dtype=np.float64).tolist()
    if settings is not None:
        data["settings"] = {
            "rho": settings.rho,
            "abs_pri_tol": settings.abs_pri_tol,
            "abs_dua_tol": settings.abs_dua_tol,
            "max_iter": settings.max_iter,
            "check_termination": settings.check_termination,
        }
    return data


def save_problem(
    path: Union[str, Path],
    problem: ProblemDefinition,
    settings: Optional[Settings] = None,
) -> None:
    """Serialize one problem (atomically) in the schema layout."""
    data = problem_to_dict(problem, settings)
    atomic_write_text(path, json.dumps(data, indent=2, allow_nan=False) + "\n")
