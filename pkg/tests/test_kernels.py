import os
import subprocess
import sys

import numpy as np
import pytest

from geoentropy import kernels, zoo
from geoentropy._accel import HAS_NUMBA
from geoentropy.entropy import flow_map
from geoentropy.manifold import build_torus
from geoentropy.paths import build_move_graph

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


def _both(fn):
    out = {}
    for be in ("numba", "numpy"):
        prev = kernels.use_backend(be)
        try:
            out[be] = fn()
        finally:
            kernels.use_backend(prev)
    return out["numba"], out["numpy"]


def _instances():
    yield zoo.build("riemannian-torus", build_torus(5, 2)), 1.0, 2
    yield zoo.build("reeb-like-distribution", n=5), 1.0, 3
    yield zoo.build("catmap-suspension", n=6, levels=4), 1.5, 1
    yield zoo.build("poisson-sphere-shell", level=1), 2.0, 1


@needs_numba
@pytest.mark.parametrize("width", [0, 1, 3, 16])
def test_delta_batch_backends_agree(width, rng):
    for g, r, T in _instances():
        mg = build_move_graph(g, r, T)
        table = g.manifold.metric_table()
        n = mg.n_points
        xs, ys = rng.integers(0, n, 60), rng.integers(0, n, 60)
        a, b = _both(lambda: kernels.delta_batch(xs, ys, mg, mg, table, T, width, 11))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


@needs_numba
def test_beam_layers_backends_agree():
    g = zoo.build("riemannian-torus", build_torus(5, 2))
    mg = build_move_graph(g, 1.0, 3)
    table = g.manifold.metric_table()
    a, b = _both(lambda: kernels.beam_layers(mg, mg, table, 3, 17, 5, 2))
    assert [list(p) for p in a[0]] == [list(p) for p in b[0]]
    np.testing.assert_array_equal(a[1], b[1])
    assert a[2] == b[2]


@needs_numba
def test_orbit_max_backends_agree(rng):
    m, X = zoo.vector_field_of("catmap-suspension", n=8, levels=4)
    fmap = flow_map(X, m, 0.25)
    table = m.metric_table()
    ii, jj = rng.integers(0, len(m), 200), rng.integers(0, len(m), 200)
    a, b = _both(lambda: kernels.orbit_max(fmap, 7, table, ii, jj))
    np.testing.assert_array_equal(a, b)


def test_orbit_max_oracle(rng):
    m, X = zoo.vector_field_of("catmap-suspension", n=8, levels=4)
    fmap = flow_map(X, m, 0.25)
    d = m.base_metric
    ii, jj = rng.integers(0, len(m), 50), rng.integers(0, len(m), 50)
    got = kernels.orbit_max(fmap, 5, m.metric_table(), ii, jj)
    for k, (i, j) in enumerate(zip(ii, jj)):
        best = 0.0
        for _ in range(6):
            best = max(best, d[i, j])
            i, j = fmap[i], fmap[j]
        assert got[k] == pytest.approx(best, abs=1e-12)


def test_use_backend_validates():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")
    prev = kernels.use_backend("numpy")
    assert kernels.backend() == "numpy"
    kernels.use_backend(prev)


def test_env_flag_selects_numpy():
    env = dict(os.environ, GEOENTROPY_DISABLE_NUMBA="1")
    code = (
        "from geoentropy import kernels, zoo\n"
        "from geoentropy.pursuit import d_r_matrix\n"
        "print(kernels.backend())\n"
        "g = zoo.build('rotation-circle', n=6)\n"
        "print(repr(d_r_matrix(g, 2/6, 2).values.sum()))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    lines = out.stdout.split()
    assert lines[0] == "numpy"
    from geoentropy.pursuit import d_r_matrix

    g = zoo.build("rotation-circle", n=6)
    assert lines[1] == repr(d_r_matrix(g, 2 / 6, 2).values.sum())
