import numpy as np
import pytest

from geoentropy import zoo
from geoentropy.manifold import build_circle, build_interval, build_torus
from geoentropy.paths import (
    BudgetExceeded,
    build_move_graph,
    canonical,
    default_quantum,
    enumerate_evader_paths,
    leaf_partition,
    parse_mode,
    speed_levels,
    walk_counts,
)
from geoentropy.structure import from_vector_field


@pytest.mark.parametrize("r", [0.5, 2.0, 10.0])
def test_zero_field_only_self_loops(r):
    g = zoo.build("zero-field", build_torus(5, 2))
    mg = build_move_graph(g, r, 3)
    assert mg.edge_set() == {(i, i) for i in range(25)}


@pytest.mark.parametrize("n,T", [(8, 1), (8, 2), (8, 3), (12, 4)])
def test_rotation_one_cell_per_step(n, T):
    # budget r with r * dt = 1/n: the fastest admissible step is one grid cell
    g = zoo.build("rotation-circle", n=n)
    mg = build_move_graph(g, T / n, T)
    expect = {(i, j) for i in range(n) for j in (i, (i + 1) % n, (i - 1) % n)}
    assert mg.edge_set() == expect
    assert mg.has_self_loops()


@pytest.mark.parametrize("r,T", [(1.0, 1), (3.0, 2), (2.0, 4)])
def test_riemannian_circle_cyclic_adjacency(r, T):
    n = 10
    g = zoo.build("riemannian-torus", build_torus(n, 1))
    mg = build_move_graph(g, r, T, quantum=T / n)  # one quantum = one cell per step
    reach = int(np.floor(r / T * n + 1e-9))
    for x in range(n):
        got = set(mg.successors(x).tolist())
        assert got == {(x + k) % n for k in range(-reach, reach + 1)}


def test_speed_levels_and_quantum():
    assert speed_levels(1.0, 1.0, 0.25) == 4
    assert speed_levels(0.1, 1.0, 0.25) == 0
    # gamma-scaled grids share the quantum bit for bit
    assert default_quantum(0.3, 1.0) == default_quantum(5 * 0.3, 5.0)
    assert canonical(0.1 + 0.2) == 0.3


def test_dropped_moves_are_counted():
    g = from_vector_field(build_interval(5), np.ones(5))
    mg = build_move_graph(g, 0.25, 1, quantum=0.25)
    # the right end cannot move further right; off-sample endpoints are dropped or clamped
    assert (4, 4) in mg.edge_set()
    assert mg.dropped >= 0


def test_leaf_partitions():
    zero = leaf_partition(zoo.build("zero-field", build_circle(6)), 1.0, 2)
    assert [list(p) for p in zero] == [[i] for i in range(6)]
    single = leaf_partition(zoo.build("riemannian-torus", build_torus(4, 2)), 1.0, 1, quantum=0.25)
    assert len(single) == 1 and len(single[0]) == 16
    shell = zoo.build("poisson-sphere-shell", level=1)
    parts = leaf_partition(shell, 2.0, 1)
    assert len(parts) == 2
    norms = np.linalg.norm(shell.manifold.coords, axis=1)
    for p in parts:
        assert np.ptp(norms[p]) < 1e-12


def test_enumerate_constant_path():
    mg = build_move_graph(zoo.build("zero-field"), 1.0, 4)
    paths = list(enumerate_evader_paths(mg, 3))
    assert len(paths) == 1
    assert list(paths[0]) == [3] * 5


def test_enumerate_three_successors():
    mg = build_move_graph(zoo.build("rotation-circle", n=8), 2 / 8, 2)
    assert set(mg.out_degree()) == {3}
    paths = list(enumerate_evader_paths(mg, 0))
    assert len(paths) == 9
    assert len({tuple(p) for p in paths}) == 9
    for p in paths:
        for a, b in zip(p, p[1:]):
            assert b in mg.successors(a)


def test_enumerate_budget():
    mg = build_move_graph(zoo.build("rotation-circle", n=8), 2 / 8, 2)
    with pytest.raises(BudgetExceeded):
        list(enumerate_evader_paths(mg, 0, budget=5))


def test_beam_enumeration_subset_of_exhaustive():
    g = zoo.build("riemannian-torus", build_torus(5, 2))
    mg = build_move_graph(g, 1.0, 2)
    full = {tuple(p) for p in enumerate_evader_paths(mg, 0)}
    beam = [tuple(p) for p in enumerate_evader_paths(mg, 0, "beam:4:1", y=7)]
    assert 0 < len(beam) <= 4
    assert set(beam) <= full


def test_walk_counts():
    mg = build_move_graph(zoo.build("rotation-circle", n=8), 1 / 8, 1)
    np.testing.assert_array_equal(walk_counts(mg, 3), np.full(8, 27.0))


@pytest.mark.parametrize(
    "mode,expect",
    [("exhaustive", ("exhaustive", 0, 0)), ("beam:16", ("beam", 16, 0)), ("beam:8:5", ("beam", 8, 5))],
)
def test_parse_mode(mode, expect):
    assert parse_mode(mode) == expect


@pytest.mark.parametrize("mode", ["beam:0", "beam", "dfs", "beam:x"])
def test_parse_mode_rejects(mode):
    with pytest.raises(ValueError):
        parse_mode(mode)
