"""Euclidean projections used by the slack update.

Two operators: elementwise clamping onto box bounds, and projection onto the
second-order cone norm(v) <= a where the apex coordinate a is the last entry
of the cone slice. The cone projection has three cases:

* inside the cone (norm(v) <= a): the point is untouched,
* inside the polar cone (norm(v) <= -a): the projection is the origin,
* otherwise: scale both parts, 0.5 * (1 + a / norm(v)) * (v, norm(v)).

The in-place variants are the ones the solve loop calls. They use plain
Python floats and math.sqrt for the norm so the generated standalone sources
can reproduce them bit for bit; IEEE requires correctly rounded sqrt, so the
accumulate-then-sqrt order is the whole contract.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .problem import ConeSlice

__all__ = [
    "box_inplace",
    "soc_inplace",
    "project_box",
    "project_soc",
    "project_slacks",
]


def box_inplace(arr: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> None:
    """Clamp rows (or a vector) onto [lower, upper]: max(lo, min(hi, v))."""
    np.minimum(arr, upper, out=arr)
    np.maximum(arr, lower, out=arr)


def soc_inplace(row: np.ndarray, start: int, length: int) -> None:
    """Project row[start:start+length] onto its cone, writing in place.

    Scalar loop on purpose: the accumulation order (square terms in index
    order, then one sqrt) is mirrored exactly by the generated sources.
    """
    last = start + length - 1
    a = float(row[last])
    ss = float(row[start]) * float(row[start])
    for i in range(start + 1, last):
        v = float(row[i])
        ss = ss + v * v
    vnorm = math.sqrt(ss)
    if vnorm <= a:
        return
    if vnorm <= -a:
        for i in range(start, last + 1):
            row[i] = 0.0
        return
    scale = 0.5 * (1.0 + a / vnorm)
    for i in range(start, last):
        row[i] = scale * float(row[i])
    row[last] = scale * vnorm


def project_box(
    z: np.ndarray, lower: np.ndarray, upper: np.ndarray, out: Optional[np.ndarray] = None
) -> np.ndarray:
    """Return the box projection of ``z``; +-inf entries leave a side open."""
    z = np.asarray(z, dtype=np.float64)
    if out is None:
        out = z.copy()
    elif out is not z:
        np.copyto(out, z)
    box_inplace(out, np.asarray(lower, dtype=np.float64), np.asarray(upper, dtype=np.float64))
    return out


def project_soc(z: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Project a whole vector onto the cone with its last entry as apex."""
    z = np.asarray(z, dtype=np.float64)
    if z.size < 2:
        raise ValueError("a cone needs at least 2 coordinates")
    if out is None:
        out = z.copy()
    elif out is not z:
        np.copyto(out, z)
    soc_inplace(out, 0, out.size)
    return out


def project_slacks(
    vec: np.ndarray,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    cones: Sequence[ConeSlice] = (),
    out: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Box-clamp then cone-project one stage vector.

    Validation guarantees cone slices never overlap finite bounds, so the
    two operators commute on the coordinates they actually touch and this
    composition is the true projection onto the intersection.
    """
    vec = np.asarray(vec, dtype=np.float64)
    if out is None:
        out = vec.copy()
    elif out is not vec:
        np.copyto(out, vec)
    if lower is not None and upper is not None:
        box_inplace(out, np.asarray(lower, dtype=np.float64), np.asarray(upper, dtype=np.float64))
    for cone in cones:
        soc_inplace(out, cone.start, cone.len)
    return out
