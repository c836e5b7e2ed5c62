import json

import numpy as np
import pytest

from geoentropy import report, zoo
from geoentropy.config import ConfigError, build_manifold, load_schema, parse_config, select_points
from geoentropy.entropy import SeparatedCount, estimate_entropy
from geoentropy.manifold import build_torus
from geoentropy.structure import StructureError


@pytest.mark.parametrize("name", sorted(zoo.ZOO))
def test_every_entry_builds_at_default_or_small_size(name):
    small = {
        "catmap-suspension": {"n": 6},
        "contact-torus3": {"n": 3},
        "linear-torus-flow": {"n": 6},
        "reeb-like-distribution": {"n": 4},
        "poisson-pi-x": {"inner_params": {"n": 4}},
        "poisson-sphere-shell": {"level": 0},
    }
    g = zoo.build(name, **small.get(name, {}))
    assert g.n_points == len(g.manifold) > 0


def test_zoo_rejects_wrong_manifold():
    with pytest.raises(StructureError):
        zoo.build("linear-torus-flow", build_torus(4, 1))
    with pytest.raises(KeyError):
        zoo.build("nope")


def test_cat_constant():
    assert zoo.CAT_ENTROPY == pytest.approx(0.9624236501192069, abs=1e-15)


def test_pi_x_structure_is_vertical_plus_inner_flow():
    g = zoo.build("poisson-pi-x", inner_params={"n": 4}, circle_points=4)
    assert g.manifold.topology == "product"
    v = g.gen_velocity
    # velocities are (c X, -xi(X)) so the inner part is always parallel to X = (1, golden slope)
    inner = v[:, :2]
    cross = inner[:, 0] * zoo.GOLDEN_SLOPE - inner[:, 1]
    assert np.abs(cross).max() < 1e-12
    assert np.any(v[:, 2])


def test_schema_is_valid_json_schema():
    import jsonschema

    jsonschema.Draft202012Validator.check_schema(load_schema())


def test_config_fields():
    cfg = parse_config(json.dumps({
        "name": "x",
        "seed": 4,
        "structure": {"scale": 2, "of": {"zoo": "riemannian-torus"}},
        "r_grid": [1, 2, 3],
        "epsilon_grid": [0.5],
        "solver": {"mode": "beam", "width": 8},
        "fit_window": [1, 3],
    }))
    assert cfg.solver_mode == ("beam", 8, 4)
    assert cfg.fit_window == (1, 3)
    assert cfg.structure().norm_scale == 2.0


def test_config_rejects_zero_beam_width():
    text = json.dumps({"structure": {"zoo": "zero-field"}, "solver": {"mode": "beam", "width": 0}}, indent=2)
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert "width" in str(exc.value)


def test_manifold_specs():
    assert len(build_manifold({"kind": "product", "factors": [{"kind": "circle", "points": 3},
                                                             {"kind": "interval", "points": 2}]})) == 6
    assert len(build_manifold({"kind": "sphere", "subdivision_level": 0})) == 12


def test_point_predicates():
    m = build_torus(4, 2)
    assert len(select_points(m, "all")) == 16
    assert list(select_points(m, {"ids": [3, 1, 3]})) == [1, 3]
    assert len(select_points(m, {"box": {"lo": [0, 0], "hi": [0.25, 0.25]}})) == 4
    assert len(select_points(m, {"ball": {"center": [0, 0], "radius": 0.25}})) == 5


def test_counts_csv_round_trip_floats():
    counts = [SeparatedCount(0.1 + 0.2, 0.3, 5, "greedy"), SeparatedCount(1.0, 0.3, 7, "greedy")]
    rows = report.counts_csv(counts).splitlines()
    assert rows[0] == "r,epsilon,N,method,ln_N_over_r"
    assert float(rows[1].split(",")[0]) == 0.1 + 0.2


def test_summary_is_deterministic():
    g = zoo.build("riemannian-torus", build_torus(4, 1))
    a = report.dumps(report.summary_dict(estimate_entropy(g, [1, 2, 3], [0.6], T=1)))
    b = report.dumps(report.summary_dict(estimate_entropy(g, [1, 2, 3], [0.6], T=1)))
    assert a == b
    assert set(json.loads(a)) >= {"slopes", "h", "H", "diagnostics"}
