import numpy as np
import pytest

from geoentropy import zoo
from geoentropy.manifold import build_circle, build_interval, build_torus
from geoentropy.paths import build_move_graph
from geoentropy.structure import (
    StructureError,
    direct_sum,
    from_distribution,
    from_poisson,
    from_riemannian,
    from_vector_field,
    scale_norm,
)


def _nonzero(g, i):
    return {(tuple(np.round(v, 12)), n) for v, n in g.generators(i) if np.any(v)}


def test_zero_field_has_only_zero_velocities():
    g = from_vector_field(build_circle(8), np.zeros((8, 1)))
    assert not np.any(g.gen_velocity)


def test_rotation_generators():
    g = from_vector_field(build_circle(8), np.ones(8))
    for i in range(8):
        assert sorted((float(v[0]), n) for v, n in g.generators(i)) == [(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]


def test_catmap_field_is_unit_suspension_direction():
    g = zoo.build("catmap-suspension", n=6, levels=4)
    v = g.gen_velocity[g.gen_ptr[:-1]]
    np.testing.assert_array_equal(v, np.tile([0.0, 0.0, 1.0], (len(v), 1)))
    assert np.all(g.gen_norm[g.gen_ptr[:-1]] == 1.0)


def test_riemannian_circle():
    g = from_riemannian(build_torus(5, 1))
    assert _nonzero(g, 0) == {((1.0,), 1.0), ((-1.0,), 1.0)}
    assert g.is_surjective


def test_riemannian_two_torus_directions():
    g = from_riemannian(build_torus(4, 2))
    dirs = {tuple(np.round(v / np.linalg.norm(v), 12)) for v, _ in g.generators(3) if np.any(v)}
    assert len(dirs) >= 8
    assert g.is_surjective and g.is_symmetric


def test_degenerate_frame_rejected():
    m = build_torus(3, 2)
    frame = np.tile(np.array([[1.0, 0.0], [2.0, 0.0]]), (len(m), 1, 1))
    with pytest.raises(StructureError):
        from_riemannian(m, frame)


def test_single_field_distribution_matches_vector_field_up_to_norms():
    m = build_circle(6)
    X = np.full(6, 0.5)
    a, b = from_distribution(m, [X]), from_vector_field(m, X)
    for i in range(6):
        va = {float(v[0]) for v, _ in a.generators(i)}
        vb = {float(v[0]) for v, _ in b.generators(i)}
        assert va == vb


def test_contact_frame_rank_two():
    g = zoo.build("contact-torus3", n=4)
    assert np.all(g.anchor_rank() == 2)
    assert not g.is_surjective


def test_radial_vanishing_frame_drops_rank():
    m = build_interval(5, -1.0, 1.0)
    g = from_distribution(m, [m.coords[:, 0]])
    centre = int(np.argmin(np.abs(m.coords[:, 0])))
    assert g.anchor_rank()[centre] == 0
    assert g.anchor_rank()[0] == 1


def test_zero_bivector():
    m = build_torus(3, 2)
    g = from_poisson(m, np.zeros((len(m), 2, 2)))
    assert not np.any(g.gen_velocity)


def test_bivector_must_be_antisymmetric():
    m = build_torus(3, 2)
    with pytest.raises(StructureError):
        from_poisson(m, np.ones((len(m), 2, 2)))


def test_sphere_bivector_velocities_tangent_to_spheres():
    g = zoo.build("poisson-sphere-shell", level=1)
    x = np.repeat(g.manifold.coords, np.diff(g.gen_ptr), axis=0)
    radial = np.abs((x * g.gen_velocity).sum(axis=1))
    assert radial.max() < 1e-12
    assert np.any(g.gen_velocity)


def test_scale_norm_identity_and_inverse():
    g = from_riemannian(build_torus(6, 1))
    g1 = scale_norm(g, 1.0)
    for r in (0.5, 1.0, 2.0):
        assert np.array_equal(g.admissible(2, r), g1.admissible(2, r))
    g2 = scale_norm(scale_norm(g, 2.0), 0.5)
    for r in (0.5, 1.0, 2.0):
        assert np.array_equal(g.admissible(2, r), g2.admissible(2, r))


def test_scale_norm_divides_admissible_speed():
    g = from_riemannian(build_torus(6, 1))
    gs = scale_norm(g, 3.0)
    assert len(gs.admissible(0, 1.0)) == 1  # only the zero generator
    assert len(gs.admissible(0, 3.0)) == len(g.admissible(0, 1.0))


def test_direct_sum_with_zero_component():
    g1 = zoo.build("rotation-circle", n=4)
    g0 = zoo.build("zero-field", build_circle(3))
    s = direct_sum(g1, g0)
    assert len(s.manifold) == 12
    # second component never moves
    assert not np.any(s.gen_velocity[:, 1])
    # every generator of g1 appears with an idle second component and the same norm
    pairs = {(float(v[0]), n) for v, n in s.generators(0)}
    for v, n in g1.generators(0):
        assert (float(v[0]), n) in pairs


def test_direct_sum_moves_are_pairs_of_component_moves():
    g1 = zoo.build("riemannian-torus", build_torus(4, 1))
    g2 = zoo.build("rotation-circle", n=4)
    s = direct_sum(g1, g2)
    for r in (0.5, 1.0, 2.0):
        a = build_move_graph(g1, r, 2, quantum=0.25)
        b = build_move_graph(g2, r, 2, quantum=0.25)
        ab = build_move_graph(s, r, 2, quantum=0.25)
        expect = {(x1 * 4 + x2, y1 * 4 + y2) for x1, y1 in a.edge_set() for x2, y2 in b.edge_set()}
        assert ab.edge_set() == expect
