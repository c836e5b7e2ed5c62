"""Numba toggle shared by the kernel modules.

Set ``GEOENTROPY_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable.
"""

import os

_DISABLED = os.environ.get("GEOENTROPY_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED

NUMBA_OPTS = {"cache": True, "nogil": True}
