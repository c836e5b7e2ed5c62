import numpy as np
import pytest

from geoentropy import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["numba", "numpy"])
def each_backend(request):
    """Run a test once per kernel backend (numba skipped when unavailable)."""
    from geoentropy._accel import HAS_NUMBA

    if request.param == "numba" and not HAS_NUMBA:
        pytest.skip("numba not installed")
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)
