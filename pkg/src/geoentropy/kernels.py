"""Kernel dispatch between the numba and pure-numpy implementations.

The backend is fixed at import time from ``GEOENTROPY_DISABLE_NUMBA``;
:func:`use_backend` switches it explicitly (used by tests and benchmarks).
"""

import numpy as np

from . import _kernels_numpy
from ._accel import HAS_NUMBA, USE_NUMBA

_backend = "numba" if USE_NUMBA else "numpy"


def backend() -> str:
    return _backend


def use_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


def _nb():
    from . import _kernels_numba

    return _kernels_numba


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def delta_batch(xs, ys, evader, pursuer, table, T, width=0, seed=0):
    """Pursuit values ``delta(x, y)`` for pairs; ``width <= 0`` is exhaustive.

    Returns ``(values, exact)``.
    """
    xs, ys = _i64(xs), _i64(ys)
    args = (_i64(evader.indptr), _i64(evader.indices), _i64(pursuer.indptr), _i64(pursuer.indices))
    if _backend == "numba":
        return _nb().delta_batch(xs, ys, *args, *table, int(T), int(width), np.uint64(seed & (2**64 - 1)))
    return _kernels_numpy.delta_batch(xs, ys, *args, table, int(T), int(width), int(seed))


def beam_layers(evader, pursuer, table, x, y, width, seed=0):
    """Kept depth-T walks, their pursuit values (ranked) and the exactness flag."""
    T = evader.T
    args = (_i64(evader.indptr), _i64(evader.indices), _i64(pursuer.indptr), _i64(pursuer.indices))
    if _backend == "numba":
        return _nb().beam_layers(*args, *table, int(x), int(y), int(T), int(width), np.uint64(seed & (2**64 - 1)))
    return _kernels_numpy.beam_layers(*args, table, int(x), int(y), int(T), int(width), int(seed))


def orbit_max(fmap, steps, table, ii, jj):
    if _backend == "numba":
        return _nb().orbit_max(_i64(fmap), int(steps), *table, _i64(ii), _i64(jj))
    return _kernels_numpy.orbit_max(_i64(fmap), int(steps), table, _i64(ii), _i64(jj))
