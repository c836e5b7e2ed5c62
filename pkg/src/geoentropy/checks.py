"""Property suites, one per theorem-level statement the library can verify.

Each suite returns a :class:`SuiteReport` of named assertions with the
measured value and the bound it was compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .entropy import bowen_dinaburg, connection_speed, estimate_entropy, lemma_constant
from .paths import DEFAULT_Q, build_move_graph, default_quantum, leaf_labels
from .pursuit import D_r_matrix, _all_ordered_pairs, _delta_pairs, d_r_matrix, triangle_violations
from .structure import GeometricStructure, direct_sum, scale_norm
from . import zoo

SUITES = ("metric-axioms", "homogeneity", "additivity", "zero-entropy", "vector-theorem", "poisson", "lemma-bound")


@dataclass
class Assertion:
    name: str
    passed: bool
    measured: object = None
    bound: object = None


@dataclass
class SuiteReport:
    suite: str
    assertions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def add(self, name, passed, measured=None, bound=None):
        self.assertions.append(Assertion(name, bool(passed), measured, bound))

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "assertions": [
                {"name": a.name, "passed": a.passed, "measured": a.measured, "bound": a.bound} for a in self.assertions
            ],
        }


def _label(g: GeometricStructure) -> str:
    name = g.meta.get("zoo", g.descriptor)
    return f"{name}[{g.manifold.topology}:{len(g.manifold)}]"


def _matrices(g, r_grid, T, q, mode="exhaustive", quantum=None):
    quantum = quantum if quantum is not None else default_quantum(r_grid[0], g.norm_scale, q)
    return [d_r_matrix(g, r, T, mode, q, quantum) for r in r_grid]


def metric_axioms(structures, r_grid, T: int = 2, q: int = DEFAULT_Q, tol: float = 1e-12) -> SuiteReport:
    """Exactness, symmetry, triangle inequality, ``d_r >= 2d`` and monotonicity in ``r``."""
    rep = SuiteReport("metric-axioms")
    for g in structures:
        lab = _label(g)
        mats = _matrices(g, r_grid, T, q)
        d = g.manifold.base_metric
        for mat in mats:
            v = mat.values
            tag = f"{lab} r={mat.r!r}"
            rep.add(f"{tag} exact", mat.all_exact)
            rep.add(f"{tag} symmetric", np.array_equal(v, v.T))
            rep.add(f"{tag} zero diagonal", not np.any(np.diag(v)))
            viol = triangle_violations(v, tol)
            rep.add(f"{tag} triangle inequality", viol == 0, viol, 0)
            gap = float((2 * d - v).max())
            rep.add(f"{tag} d_r >= 2d", gap <= tol, gap, 0.0)
        for a, b in zip(mats, mats[1:]):
            drop = float((a.values - b.values).max())
            rep.add(f"{lab} monotone r={a.r!r}->{b.r!r}", drop <= tol, drop, 0.0)
    return rep


def homogeneity(structures, gammas, r_grid, T: int = 2, q: int = DEFAULT_Q, epsilon_grid=None,
                window="all") -> SuiteReport:
    """Scaling the norm by gamma and the budget by gamma leaves graphs and metrics identical."""
    rep = SuiteReport("homogeneity")
    for g in structures:
        lab = _label(g)
        u = default_quantum(r_grid[0], g.norm_scale, q)
        for gamma in gammas:
            gs = scale_norm(g, gamma)
            us = default_quantum(gamma * r_grid[0], gs.norm_scale, q)
            rep.add(f"{lab} gamma={gamma} shared quantum", u == us, us, u)
            for r in r_grid:
                a = build_move_graph(g, r, T, q=q, quantum=u)
                b = build_move_graph(gs, gamma * r, T, q=q, quantum=us)
                same = np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
                rep.add(f"{lab} gamma={gamma} r={r!r} edge sets identical", same)
                ma = d_r_matrix(g, r, T, "exhaustive", q, u).values
                mb = d_r_matrix(gs, gamma * r, T, "exhaustive", q, us).values
                rep.add(f"{lab} gamma={gamma} r={r!r} d_r bit-identical", np.array_equal(ma, mb))
            if epsilon_grid is not None and len(r_grid) >= 3:
                ea = estimate_entropy(g, r_grid, epsilon_grid, T, q=q, quantum=u, window=window)
                eb = estimate_entropy(gs, [gamma * r for r in r_grid], epsilon_grid, T, q=q, quantum=us, window=window)
                for eps in ea.slopes:
                    sa, sb = ea.slopes[eps].raw_slope, eb.slopes[eps].raw_slope
                    if sa == 0 and sb == 0:
                        ok, ratio = True, None
                    else:
                        ratio = sa / sb if sb != 0 else float("inf")
                        ok = abs(ratio - gamma) <= 1e-9 * gamma
                    rep.add(f"{lab} gamma={gamma} eps={eps!r} slope ratio", ok, ratio, gamma)
    return rep


def delta_matrix(g, r, T, q=DEFAULT_Q, quantum=None, mode="exhaustive") -> np.ndarray:
    """Directed ``delta_r`` for all ordered pairs (diagonal 0)."""
    quantum = quantum if quantum is not None else default_quantum(r, g.norm_scale, q)
    mg = build_move_graph(g, r, T, q=q, quantum=quantum)
    n = len(g.manifold)
    xs, ys = _all_ordered_pairs(np.arange(n))
    vals, _ = _delta_pairs(xs, ys, mg, mg, mode)
    out = np.zeros((n, n))
    out[xs, ys] = vals
    return out


def additivity(g1, g2, r_grid, T: int = 2, q: int = DEFAULT_Q) -> SuiteReport:
    """``delta`` of the sum equals the max of the component ``delta`` values, exactly."""
    rep = SuiteReport("additivity")
    gs = direct_sum(g1, g2)
    n2 = len(g2.manifold)
    u = default_quantum(r_grid[0], 1.0, q)
    for r in r_grid:
        d1 = delta_matrix(g1, r, T, q, u)
        d2 = delta_matrix(g2, r, T, q, u)
        ds = delta_matrix(gs, r, T, q, u)
        expect = np.maximum(np.repeat(np.repeat(d1, n2, 0), n2, 1), np.tile(d2, (len(g1.manifold),) * 2))
        worst = float(np.abs(ds - expect).max())
        rep.add(f"{_label(gs)} r={r!r} delta factorizes", worst == 0.0, worst, 0.0)
    return rep


def sum_entropy(g1, g2, r_grid, epsilon_grid, rel_tol: float = 0.15, **kw) -> SuiteReport:
    """End-to-end ``h(g1 + g2)`` against ``h(g1) + h(g2)``."""
    rep = SuiteReport("additivity")
    e1 = estimate_entropy(g1, r_grid, epsilon_grid, **kw)
    e2 = estimate_entropy(g2, r_grid, epsilon_grid, **kw)
    es = estimate_entropy(direct_sum(g1, g2), r_grid, epsilon_grid, **kw)
    target = e1.h + e2.h
    err = abs(es.h - target)
    rep.add(f"h(sum)={es.h:.4f} vs h1+h2={target:.4f}", err <= rel_tol * max(target, 1e-12) or err < 0.05,
            es.h, target)
    return rep


def zero_entropy(structures, r_grid, epsilon_grid, T: int = 2, q: int = DEFAULT_Q, noise=None,
                 slope_tol: float = 0.05, check_range: bool = True, window="all") -> SuiteReport:
    """Bounded ``d_r`` (range over r within snapping noise) and flat counts."""
    rep = SuiteReport("zero-entropy")
    for g in structures:
        lab = _label(g)
        u = default_quantum(r_grid[0], g.norm_scale, q)
        if check_range:
            mats = _matrices(g, r_grid, T, q, quantum=u)
            stack = np.stack([m.values for m in mats])
            spread = float((stack.max(0) - stack.min(0)).max())
            bound = noise if noise is not None else 2.0 * g.manifold.mesh_scale
            rep.add(f"{lab} max_r d_r - min_r d_r", spread <= bound + 1e-12, spread, bound)
        est = estimate_entropy(g, r_grid, epsilon_grid, T, q=q, quantum=u, window=window)
        for eps in est.diagnostics["trusted_epsilons"]:
            s = est.slopes[eps].slope
            rep.add(f"{lab} slope eps={eps!r}", s < slope_tol, s, slope_tol)
    return rep


def vector_theorem(name: str, params: dict, r_grid, epsilon_grid, bd_epsilon_grid, mode="beam:64", T: int = 1,
                   q: int = DEFAULT_Q, window="unsaturated", h_tol: float = 0.4, top_ref=None,
                   top_tol: float = 0.25, zero_tol: float = 0.05) -> SuiteReport:
    """Pursuit entropy of a vector field against twice the Bowen-Dinaburg entropy.

    With ``top_ref`` the flow entropy is also compared to a known value; a
    zero reference switches to the absolute zero tolerance for both.
    """
    rep = SuiteReport("vector-theorem")
    g = zoo.build(name, **params)
    m, X = zoo.vector_field_of(name, **params)
    bd = bowen_dinaburg(X, m, r_grid, bd_epsilon_grid, q=q, window=window)
    est = estimate_entropy(g, r_grid, epsilon_grid, T, mode, q=q, window=window)
    if top_ref is not None and top_ref == 0:
        rep.add(f"{name} |h_top|", abs(bd.h_top) < zero_tol, bd.h_top, zero_tol)
        rep.add(f"{name} |h|", abs(est.h) < zero_tol, est.h, zero_tol)
        return rep
    if top_ref is not None:
        rep.add(f"{name} h_top vs reference", abs(bd.h_top - top_ref) <= top_tol, bd.h_top, [top_ref, top_tol])
    rep.add(f"{name} h vs 2 h_top", abs(est.h - 2 * bd.h_top) <= h_tol, est.h, [2 * bd.h_top, h_tol])
    return rep


def poisson(inner: str, inner_params: dict, r_grid, epsilon_grid, bd_epsilon_grid, circle_points: int = 4,
            mode="beam:64", T: int = 1, q: int = DEFAULT_Q, window="unsaturated", rel_tol: float = 0.25,
            zero_tol: float = 0.05, expect_zero: bool = False) -> SuiteReport:
    """Entropy of ``X ^ d/dq`` against twice the flow entropy of ``X``."""
    rep = SuiteReport("poisson")
    g = zoo.build("poisson-pi-x", inner=inner, inner_params=inner_params, circle_points=circle_points)
    est = estimate_entropy(g, r_grid, epsilon_grid, T, mode, q=q, window=window)
    if expect_zero:
        rep.add(f"poisson-pi-x({inner}) h", est.h < zero_tol, est.h, zero_tol)
        return rep
    m, X = zoo.vector_field_of(inner, **inner_params)
    bd = bowen_dinaburg(X, m, r_grid, bd_epsilon_grid, q=q, window=window)
    target = 2 * bd.h_top
    rep.add(f"poisson-pi-x({inner}) h vs 2 h_top", abs(est.h - target) <= rel_tol * target, est.h,
            [target, rel_tol])
    return rep


def lemma_bound(structures, r_grid, rho_grid, T: int = 2, q: int = DEFAULT_Q) -> SuiteReport:
    """``sup_r d_r(x, y) <= 2 K rho(x, y)`` for every pair joined at a probe speed."""
    rep = SuiteReport("lemma-bound")
    for g in structures:
        lab = _label(g)
        K = lemma_constant(g, T, rho_grid, q=q)
        rho = connection_speed(g, T, rho_grid, q=q)
        rho = np.maximum(rho, rho.T)
        mats = _matrices(g, r_grid, T, q)
        sup = np.max(np.stack([m.values for m in mats]), axis=0)
        joined = np.isfinite(rho) & ~np.eye(len(rho), dtype=bool)
        excess = float((sup - 2 * K * rho)[joined].max()) if joined.any() else 0.0
        rep.add(f"{lab} K_hat finite", np.isfinite(K), K)
        rep.add(f"{lab} sup_r d_r <= 2 K rho ({int(joined.sum())} pairs)", excess <= 1e-12, excess, 0.0)
    return rep


def variant_ordering(structures, r_grid, epsilon_grid, T: int = 2, q: int = DEFAULT_Q, window="all") -> SuiteReport:
    """``D_r <= d_r`` elementwise and ``H <= h`` up to the fit residual."""
    rep = SuiteReport("variant-ordering")
    for g in structures:
        lab = _label(g)
        u = default_quantum(r_grid[0], g.norm_scale, q)
        for r in r_grid:
            a = d_r_matrix(g, r, T, "exhaustive", q, u).values
            b = D_r_matrix(g, r, T, "exhaustive", None, r_grid[-1], q, u).values
            worst = float((b - a).max())
            rep.add(f"{lab} r={r!r} D_r <= d_r", worst <= 1e-12, worst, 0.0)
        est = estimate_entropy(g, r_grid, epsilon_grid, T, q=q, quantum=u, compute_H=True, window=window)
        for eps in est.slopes:
            h, H = est.slopes[eps], est.H_slopes[eps]
            slack = h.residual + H.residual + 1e-12
            rep.add(f"{lab} eps={eps!r} H <= h", H.slope <= h.slope + slack, H.slope, [h.slope, slack])
    return rep
