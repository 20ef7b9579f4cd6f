"""Fixed-evaluation-order dense kernels used inside the solve loop.

The library promises bit-identical iterates against the standalone sources
emitted by the code generator. Reductions are therefore accumulated column
by column in a fixed order instead of delegating to BLAS, whose summation
order is unspecified. Every kernel writes into caller-owned buffers and
allocates nothing.
"""

from __future__ import annotations

import numpy as np

__all__ = ["matvec", "matvec_t"]


def matvec(a: np.ndarray, x: np.ndarray, out: np.ndarray, scr: np.ndarray) -> None:
    """out = a @ x, accumulated one column of ``a`` at a time.

    ``scr`` is caller-owned scratch of the same shape as ``out``. Neither
    ``out`` nor ``scr`` may alias ``a`` or ``x``.
    """
    np.multiply(a[:, 0], x[0], out=out)
    for j in range(1, a.shape[1]):
        np.multiply(a[:, j], x[j], out=scr)
        np.add(out, scr, out=out)


def matvec_t(a: np.ndarray, x: np.ndarray, out: np.ndarray, scr: np.ndarray) -> None:
    """out = a.T @ x, accumulated one row of ``a`` at a time.

    Same accumulation order as :func:`matvec` applied to the transpose,
    without materializing it.
    """
    np.multiply(a[0], x[0], out=out)
    for j in range(1, a.shape[0]):
        np.multiply(a[j], x[j], out=scr)
        np.add(out, scr, out=out)
