"""Command-line runner.

    geoentropy estimate <config>
    geoentropy check <suite> <config>
    geoentropy metric <config>
    geoentropy zoo

Exit codes: 0 success, 1 check failure, 2 configuration error, 3 solver
budget exhausted.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import checks, report, zoo
from .config import ConfigError, ExperimentConfig, load_config, select_points
from .entropy import bowen_dinaburg, estimate_entropy, local_entropy
from .paths import BudgetExceeded, parse_mode
from .pursuit import D_r_matrix, d_r_matrix

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _apply_flags(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mode is not None:
        try:
            kind, width, _ = parse_mode(args.mode)
        except ValueError as exc:
            raise ConfigError(f"--mode: {exc}") from None
        cfg.mode, cfg.width = kind, width
    return cfg


def _out_dir(cfg, args) -> str:
    path = args.output_dir or cfg.outputs["dir"]
    os.makedirs(path, exist_ok=True)
    return path


def _require(cfg, *names):
    for name in names:
        if not getattr(cfg, name):
            raise ConfigError(f"{name}: required for this command")


def cmd_estimate(cfg: ExperimentConfig, args) -> int:
    _require(cfg, "r_grid", "epsilon_grid")
    g = cfg.structure()
    common = dict(T=cfg.T, mode=cfg.solver_mode, q=cfg.q, quantum=cfg.quantum, snap_tolerance=cfg.snap_tolerance,
                  method=cfg.packing, window=cfg.fit_window, floor=cfg.floor)
    extra = {"config": cfg.name, "seed": cfg.seed}
    local = cfg.raw.get("local")
    if local:
        m = g.manifold
        K = select_points(m, local["K"])
        runs = [(local["U"], local["V"])] + [(s["U"], s["V"]) for s in local.get("sweep", [])]
        sweep = []
        for U_pred, V_pred in runs:
            U, V = select_points(m, U_pred), select_points(m, V_pred)
            e = local_entropy(g, K, U, V, cfg.r_grid, cfg.epsilon_grid, budget=cfg.budget, **common)
            sweep.append({"U_size": len(U), "V_size": len(V), "h": e.h})
            if len(sweep) == 1:
                est = e
        extra["local_sweep"] = sweep
    else:
        est = estimate_entropy(g, cfg.r_grid, cfg.epsilon_grid, saturation=cfg.saturation, compute_H=cfg.compute_H,
                               lemma_rhos=cfg.lemma_rhos, jobs=args.jobs, budget=cfg.budget, **common)
    bd_block = cfg.raw.get("bowen_dinaburg")
    if bd_block is not None:
        if g.descriptor != "vector-field":
            raise ConfigError("bowen_dinaburg: the structure must be a vector field")
        bd = bowen_dinaburg(g, g.manifold, cfg.r_grid, bd_block.get("epsilon_grid", cfg.epsilon_grid),
                            dt=bd_block.get("dt"), q=cfg.q, method=cfg.packing, window=cfg.fit_window)
        extra["h_top"] = bd.h_top
        extra["h_top_slopes"] = {repr(e): f.slope for e, f in bd.slopes.items()}
    out = _out_dir(cfg, args)
    prefix = cfg.outputs["prefix"]
    formats = cfg.outputs["formats"]
    if "csv" in formats:
        report.write_text(os.path.join(out, f"{prefix}_counts.csv"), report.counts_csv(est.counts))
        if est.H_counts:
            report.write_text(os.path.join(out, f"{prefix}_counts_H.csv"), report.counts_csv(est.H_counts))
    if "json" in formats:
        report.write_text(os.path.join(out, f"{prefix}_summary.json"), report.dumps(report.summary_dict(est, extra)))
    print(f"h = {est.h!r}")
    if est.H is not None:
        print(f"H = {est.H!r}")
    if "h_top" in extra:
        print(f"h_top = {extra['h_top']!r}")
    return EXIT_OK


def cmd_metric(cfg: ExperimentConfig, args) -> int:
    _require(cfg, "r_grid")
    g = cfg.structure()
    out = _out_dir(cfg, args)
    prefix = cfg.outputs["prefix"]
    for r in cfg.r_grid:
        mat = d_r_matrix(g, r, cfg.T, cfg.solver_mode, cfg.q, cfg.quantum, cfg.snap_tolerance, args.jobs, cfg.budget)
        mat.to_csv(os.path.join(out, f"{prefix}_d_r_{r!r}.csv"))
        if cfg.compute_H:
            hm = D_r_matrix(g, r, cfg.T, cfg.solver_mode, None, cfg.r_grid[-1], cfg.q, cfg.quantum,
                            cfg.snap_tolerance)
            hm.to_csv(os.path.join(out, f"{prefix}_D_r_{r!r}.csv"))
        print(f"r = {r!r}: wrote d_r" + (" and D_r" if cfg.compute_H else ""))
    return EXIT_OK


def _suite_structures(cfg):
    params = cfg.raw.get("checks", {})
    from .config import build_structure

    specs = params.get("structures")
    if specs:
        return [build_structure(s) for s in specs]
    return [cfg.structure()]


def cmd_check(suite: str, cfg: ExperimentConfig, args) -> int:
    if suite not in checks.SUITES:
        raise ConfigError(f"unknown suite {suite!r}; known: {', '.join(checks.SUITES)}")
    p = cfg.raw.get("checks", {})
    T = cfg.T
    if suite == "metric-axioms":
        _require(cfg, "r_grid")
        rep = checks.metric_axioms(_suite_structures(cfg), cfg.r_grid, T, cfg.q)
    elif suite == "homogeneity":
        _require(cfg, "r_grid")
        rep = checks.homogeneity(_suite_structures(cfg), p.get("gammas", [2, 5]), cfg.r_grid, T, cfg.q,
                                 cfg.epsilon_grid or None)
    elif suite == "additivity":
        _require(cfg, "r_grid")
        structs = _suite_structures(cfg)
        if len(structs) == 1 and structs[0].components:
            structs = list(structs[0].components)
        if len(structs) != 2:
            raise ConfigError("checks.structures: additivity needs exactly two structures (or a direct_sum)")
        rep = checks.additivity(structs[0], structs[1], cfg.r_grid, T, cfg.q)
    elif suite == "zero-entropy":
        _require(cfg, "r_grid", "epsilon_grid")
        rep = checks.zero_entropy(_suite_structures(cfg), cfg.r_grid, cfg.epsilon_grid, T, cfg.q,
                                  p.get("noise"), p.get("slope_tol", 0.05), p.get("check_range", True),
                                  cfg.fit_window)
    elif suite == "vector-theorem":
        _require(cfg, "r_grid", "epsilon_grid")
        spec = cfg.raw["structure"]
        if "zoo" not in spec:
            raise ConfigError("structure: vector-theorem needs a zoo vector field")
        rep = checks.vector_theorem(spec["zoo"], spec.get("params", {}), cfg.r_grid, cfg.epsilon_grid,
                                    p.get("bd_epsilon_grid", cfg.epsilon_grid), _mode_str(cfg), T, cfg.q,
                                    cfg.fit_window, p.get("h_tol", 0.4), p.get("top_ref"), p.get("top_tol", 0.25))
    elif suite == "poisson":
        _require(cfg, "r_grid", "epsilon_grid")
        rep = checks.poisson(p.get("inner", "linear-torus-flow"), p.get("inner_params", {}), cfg.r_grid,
                             cfg.epsilon_grid, p.get("bd_epsilon_grid", cfg.epsilon_grid),
                             p.get("circle_points", 4), _mode_str(cfg), T, cfg.q, cfg.fit_window,
                             p.get("rel_tol", 0.25), expect_zero=p.get("expect_zero", False))
    else:
        _require(cfg, "r_grid")
        rep = checks.lemma_bound(_suite_structures(cfg), cfg.r_grid, p.get("rho_grid", cfg.r_grid), T, cfg.q)
    out = _out_dir(cfg, args)
    text = report.dumps(rep.to_dict())
    report.write_text(os.path.join(out, f"{cfg.outputs['prefix']}_check_{suite}.json"), text)
    for a in rep.assertions:
        print(f"{'PASS' if a.passed else 'FAIL'} {a.name} measured={a.measured!r} bound={a.bound!r}")
    print(f"{suite}: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_CHECK


def _mode_str(cfg):
    return f"beam:{cfg.width}:{cfg.seed}" if cfg.mode == "beam" else "exhaustive"


def cmd_zoo() -> int:
    for name, expected, desc in zoo.listing():
        print(f"{name:24s} {expected:45s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", help="directory for CSV/JSON artifacts (default: outputs.dir or .)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--mode", help="solver mode: exhaustive or beam:<width>")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for pair evaluation")
    parser = argparse.ArgumentParser(prog="geoentropy", description="Entropy of geometric structures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("estimate", parents=[common], help="estimate h (and H) from a config")
    p.add_argument("config")
    p = sub.add_parser("check", parents=[common], help="run a property suite")
    p.add_argument("suite", help=", ".join(checks.SUITES))
    p.add_argument("config")
    p = sub.add_parser("metric", parents=[common], help="dump d_r (and D_r) matrices as CSV")
    p.add_argument("config")
    sub.add_parser("zoo", help="list built-in structures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "zoo":
        return cmd_zoo()
    try:
        if args.command == "check" and args.suite not in checks.SUITES:
            raise ConfigError(f"unknown suite {args.suite!r}; known: {', '.join(checks.SUITES)}")
        try:
            cfg = _apply_flags(load_config(args.config), args)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if args.command == "estimate":
            return cmd_estimate(cfg, args)
        if args.command == "metric":
            return cmd_metric(cfg, args)
        return cmd_check(args.suite, cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
