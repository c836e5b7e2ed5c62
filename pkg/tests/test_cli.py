import json

import pytest

from geoentropy.cli import main
from geoentropy.config import ConfigError, parse_config


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2) + "\n" if not isinstance(obj, str) else obj)
    return str(p)


ZERO = {
    "name": "zero",
    "seed": 1,
    "structure": {"zoo": "zero-field", "manifold": {"kind": "circle", "points": 8}},
    "r_grid": [1, 2, 3],
    "epsilon_grid": [0.3, 0.6],
    "T": 2,
    "compute_H": True,
}


def test_zoo_listing(capsys):
    assert main(["zoo"]) == 0
    out = capsys.readouterr().out
    assert "poisson-pi-x" in out
    lines = {ln.split()[0]: ln for ln in out.splitlines()}
    assert "expected-zero" in lines["contact-torus3"]
    assert "expected-zero" in lines["poisson-sphere-shell"]


def test_estimate_zero_field(tmp_path, capsys):
    cfg = _write(tmp_path, ZERO)
    assert main(["estimate", cfg, "--output-dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "h = 0.0" in out and "H = 0.0" in out
    summary = json.loads((tmp_path / "out" / "zero_summary.json").read_text())
    assert summary["h"] == 0.0 and summary["H"] == 0.0
    header = (tmp_path / "out" / "zero_counts.csv").read_text().splitlines()[0]
    assert header == "r,epsilon,N,method,ln_N_over_r"
    assert (tmp_path / "out" / "zero_counts_H.csv").exists()


def test_reruns_are_byte_identical(tmp_path):
    cfg = dict(ZERO, structure={"zoo": "reeb-like-distribution", "params": {"n": 6}},
               solver={"mode": "beam", "width": 3}, T=2, epsilon_grid=[0.4, 0.8])
    path = _write(tmp_path, cfg)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["estimate", path, "--output-dir", str(d), "--jobs", str(k + 1)]) == 0
        outs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())})
    assert outs[0] == outs[1]
    assert set(outs[0]) == {"zero_counts.csv", "zero_counts_H.csv", "zero_summary.json"}


def test_descending_grid_exit_2(tmp_path, capsys):
    text = json.dumps(dict(ZERO, r_grid=[3, 2, 1]), indent=2)
    path = _write(tmp_path, text)
    assert main(["estimate", path]) == 2
    err = capsys.readouterr().err
    assert "r_grid" in err
    line = next(i for i, ln in enumerate(text.splitlines(), 1) if '"r_grid"' in ln)
    assert f"line {line}" in err


def test_schema_error_is_line_anchored():
    text = json.dumps(dict(ZERO, T=0), indent=2)
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    line = next(i for i, ln in enumerate(text.splitlines(), 1) if '"T"' in ln)
    assert exc.value.line == line and exc.value.field == "T"


def test_malformed_json_exit_2(tmp_path, capsys):
    path = _write(tmp_path, '{\n  "name": "x",\n  "r_grid": [1, 2,\n}\n')
    assert main(["estimate", path]) == 2
    assert "line" in capsys.readouterr().err


def test_unknown_zoo_name_exit_2(tmp_path, capsys):
    path = _write(tmp_path, dict(ZERO, structure={"zoo": "no-such-thing"}))
    assert main(["estimate", path]) == 2
    assert "no-such-thing" in capsys.readouterr().err


def test_unknown_suite_exit_2(tmp_path):
    assert main(["check", "nonsense", _write(tmp_path, ZERO)]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["estimate", str(tmp_path / "missing.json")]) == 2


def test_check_pass_and_fail(tmp_path, capsys):
    ok = dict(ZERO, r_grid=[1, 2, 3, 4])
    assert main(["check", "zero-entropy", _write(tmp_path, ok), "--output-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "zero_check_zero-entropy.json").read_text())
    assert report["passed"] and all("measured" in a for a in report["assertions"])
    bad = dict(ok, checks={"slope_tol": 0.0})
    assert main(["check", "zero-entropy", _write(tmp_path, bad, "bad.json"), "--output-dir", str(tmp_path)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_metric_axioms_circle6(tmp_path):
    cfg = {
        "name": "ax",
        "structure": {"zoo": "zero-field", "manifold": {"kind": "circle", "points": 6}},
        "r_grid": [1, 2, 3, 4],
        "T": 3,
        "checks": {"structures": [
            {"zoo": "zero-field", "manifold": {"kind": "circle", "points": 6}},
            {"zoo": "rotation-circle", "params": {"n": 6}},
            {"zoo": "riemannian-torus", "manifold": {"kind": "circle", "points": 6}},
        ]},
    }
    assert main(["check", "metric-axioms", _write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0


def test_homogeneity_gamma_three(tmp_path, capsys):
    cfg = {
        "name": "hom",
        "structure": {"zoo": "riemannian-torus", "manifold": {"kind": "torus", "points_per_dim": 4, "dims": 2}},
        "r_grid": [0.5, 1, 1.5],
        "epsilon_grid": [0.6],
        "T": 2,
        "checks": {"gammas": [3]},
    }
    assert main(["check", "homogeneity", _write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0
    assert "bit-identical" in capsys.readouterr().out


def test_vector_theorem_linear_flow(tmp_path):
    cfg = {
        "name": "lin",
        "structure": {"zoo": "linear-torus-flow", "params": {"n": 12}},
        "r_grid": [0.5, 1, 1.5, 2],
        "epsilon_grid": [0.4],
        "solver": {"mode": "beam", "width": 16},
        "fit_window": "unsaturated",
        "checks": {"bd_epsilon_grid": [0.2], "top_ref": 0.0},
    }
    assert main(["check", "vector-theorem", _write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0


def test_budget_exhaustion_exit_3(tmp_path, capsys):
    cfg = {
        "name": "big",
        "structure": {"zoo": "riemannian-torus", "manifold": {"kind": "torus", "points_per_dim": 6, "dims": 2}},
        "r_grid": [2],
        "T": 4,
        "solver": {"mode": "exhaustive", "budget": 100},
    }
    path = _write(tmp_path, cfg)
    assert main(["metric", path, "--output-dir", str(tmp_path)]) == 3
    assert "beam" in capsys.readouterr().err
    assert main(["metric", path, "--output-dir", str(tmp_path), "--mode", "beam:4"]) == 0


def test_bad_mode_flag_exit_2(tmp_path):
    assert main(["estimate", _write(tmp_path, ZERO), "--mode", "beam:0"]) == 2


def test_metric_dump(tmp_path):
    cfg = dict(ZERO, compute_H=False)
    assert main(["metric", _write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0
    text = (tmp_path / "zero_d_r_1.0.csv").read_text()
    assert text.startswith("# kind=d_r r=1.0 T=2")


def test_local_block_with_sweep(tmp_path):
    cfg = {
        "name": "loc",
        "structure": {"zoo": "linear-torus-flow", "params": {"n": 8}},
        "r_grid": [1, 2, 3],
        "epsilon_grid": [0.3],
        "local": {
            "K": {"ids": [0]},
            "U": {"box": {"lo": [0, 0], "hi": [0.25, 0.25]}},
            "V": {"box": {"lo": [0, 0], "hi": [0.5, 0.5]}},
            "sweep": [{"U": {"ids": [0, 1]}, "V": {"ball": {"center": [0, 0], "radius": 0.3}}}],
        },
    }
    assert main(["estimate", _write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "loc_summary.json").read_text())
    assert summary["local"] and len(summary["local_sweep"]) == 2
