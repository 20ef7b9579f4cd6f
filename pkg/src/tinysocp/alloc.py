"""Buffer-allocation funnel so tests can certify the solve loop allocates nothing.

Every persistent array the library creates goes through :func:`new_array`.
Tests wrap a solve in :func:`watch` and assert the counter stayed at zero.
The test suite also cross-checks with tracemalloc, which catches stray numpy
temporaries that would bypass this funnel entirely.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

__all__ = ["new_array", "watch"]


class _Guard:
    __slots__ = ("active", "count")

    def __init__(self) -> None:
        self.active = False
        self.count = 0


_guard = _Guard()


def new_array(shape, dtype=np.float64) -> np.ndarray:
    """Allocate a zeroed array, counting it if a watch() block is active."""
    if _guard.active:
        _guard.count += 1
    return np.zeros(shape, dtype=dtype)


@contextmanager
def watch():
    """Count library buffer allocations made inside the block.

    Yields the guard; read ``guard.count`` after (or during) the block.
    Not reentrant and not thread safe, which is fine for its only intended
    use inside single-threaded tests.
    """
    _guard.active = True
    _guard.count = 0
    try:
        yield _guard
    finally:
        _guard.active = False
