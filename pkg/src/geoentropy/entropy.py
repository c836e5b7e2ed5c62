"""Separated-set counts, growth-rate fits and entropy estimates.

Counts ``N(d_r, eps)`` come from the conflict graph joining pairs closer
than ``eps``: a separated set is an independent set of that graph.  The
entropy at scale ``eps`` is the least-squares slope of ``ln N`` against
``r``.  :func:`bowen_dinaburg` is an independent estimator of the
topological entropy of a flow, used as the reference for vector fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .manifold import SampledManifold, snap_many
from .paths import DEFAULT_Q, PATH_BUDGET, build_move_graph, default_quantum, leaf_labels
from .pursuit import (
    GraphSpec,
    PursuitMatrix,
    SparsePursuit,
    d_r_matrix,
    D_r_matrix,
    local_d_r_matrix,
    sparse_pursuit,
)
from . import kernels
from .structure import GeometricStructure

EXACT_COMPONENT_LIMIT = 64
DENSE_LIMIT = 600
WINDOWS = ("upper-half", "unsaturated", "all")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SeparatedCount:
    r: float
    epsilon: float
    N: int
    method: str


@dataclass(frozen=True)
class Fit:
    """Least-squares growth rate of ``ln N`` in ``r``."""

    slope: float
    raw_slope: float
    intercept: float
    residual: float
    r_used: tuple
    fallback: bool = False


@dataclass
class EntropyEstimate:
    """Per-epsilon slopes, the headline values and diagnostics."""

    epsilons: list
    slopes: dict
    h: float
    counts: list
    H: float | None = None
    H_slopes: dict | None = None
    H_counts: list | None = None
    local: bool = False
    diagnostics: dict = field(default_factory=dict)


@dataclass
class BowenDinaburgEstimate:
    epsilons: list
    slopes: dict
    h_top: float
    counts: list
    diagnostics: dict = field(default_factory=dict)


# -- packing -----------------------------------------------------------------------------


def _conflict_graph(matrix, epsilon):
    if isinstance(matrix, (PursuitMatrix, SparsePursuit)):
        pairs = matrix.conflicts(epsilon)
        n = matrix.n
    else:
        values = np.asarray(matrix, dtype=np.float64)
        n = values.shape[0]
        i, j = np.nonzero(np.triu(values < epsilon, k=1))
        pairs = np.stack([i, j], axis=1)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows), dtype=bool), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return n, adj


def greedy_separated(adj: sp.csr_matrix) -> np.ndarray:
    """Id-ordered maximal independent set (positions of accepted points)."""
    n = adj.shape[0]
    blocked = np.zeros(n, dtype=bool)
    chosen = []
    ptr, idx = adj.indptr, adj.indices
    for i in range(n):
        if not blocked[i]:
            chosen.append(i)
            blocked[idx[ptr[i] : ptr[i + 1]]] = True
    return np.array(chosen, dtype=np.int64)


def _mis_size(nbr: list) -> int:
    """Maximum independent set size of a graph given as neighbor bitmasks."""
    k = len(nbr)
    best = [0]

    def solve(P, size):
        if P == 0:
            if size > best[0]:
                best[0] = size
            return
        if size + bin(P).count("1") <= best[0]:
            return
        # vertices of degree <= 1 inside P always belong to some maximum set
        v_max, deg_max = -1, -1
        Q = P
        while Q:
            low = Q & -Q
            v = low.bit_length() - 1
            Q ^= low
            deg = bin(nbr[v] & P).count("1")
            if deg <= 1:
                solve(P & ~nbr[v] & ~low, size + 1)
                return
            if deg > deg_max:
                v_max, deg_max = v, deg
        bit = 1 << v_max
        solve(P & ~nbr[v_max] & ~bit, size + 1)
        solve(P & ~bit, size)

    solve((1 << k) - 1, 0)
    return best[0]


def exact_separated_size(adj: sp.csr_matrix, limit: int = EXACT_COMPONENT_LIMIT) -> int:
    n = adj.shape[0]
    ncomp, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    if n > limit and sizes.max() > limit:
        raise ValueError(
            f"exact packing refused: conflict component of {sizes.max()} points exceeds the limit {limit}"
        )
    total = int(np.count_nonzero(sizes == 1))
    for c in np.flatnonzero(sizes > 1):
        members = np.flatnonzero(labels == c)
        pos = {int(v): k for k, v in enumerate(members)}
        nbr = []
        for v in members:
            mask = 0
            for w in adj.indices[adj.indptr[v] : adj.indptr[v + 1]]:
                mask |= 1 << pos[int(w)]
            nbr.append(mask)
        total += _mis_size(nbr)
    return total


def max_separated(matrix, epsilon: float, method: str = "greedy") -> SeparatedCount:
    """Size of an ``epsilon``-separated set (exact maximum or id-ordered greedy)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n, adj = _conflict_graph(matrix, epsilon)
    if method == "greedy":
        N = len(greedy_separated(adj))
    elif method == "exact":
        N = exact_separated_size(adj)
    else:
        raise ValueError(f"unknown packing method {method!r}")
    r = float(getattr(matrix, "r", float("nan")))
    return SeparatedCount(r, float(epsilon), int(N), method)


# -- fitting -----------------------------------------------------------------------------


def _window_mask(rs, Ns, window, n_points, saturation):
    k = len(rs)
    if window == "all":
        return np.ones(k, dtype=bool), False
    if window == "upper-half":
        m = np.zeros(k, dtype=bool)
        m[k - max(3, -(-k // 2)) :] = True
        return m, False
    if window == "unsaturated":
        if n_points is None:
            raise FitError("the unsaturated window needs the point count")
        m = Ns <= saturation * n_points
        if m.sum() >= 3:
            return m, False
        m = np.zeros(k, dtype=bool)
        m[:3] = True
        return m, True
    if isinstance(window, (tuple, list)) and len(window) == 2:
        lo, hi = window
        return (rs >= lo) & (rs <= hi), False
    raise FitError(f"unknown fit window {window!r}")


def entropy_from_counts(counts, window="upper-half", n_points: int | None = None, saturation: float = 0.25) -> Fit:
    """Slope of ``ln N`` against ``r`` over the fit window, clamped at 0."""
    counts = sorted(counts, key=lambda c: c.r)
    if len({(c.epsilon, c.method) for c in counts}) > 1:
        raise FitError("counts must share one epsilon and one method")
    rs = np.array([c.r for c in counts], dtype=np.float64)
    Ns = np.array([c.N for c in counts], dtype=np.float64)
    if len(np.unique(rs)) < 3:
        raise FitError("need at least 3 distinct r values")
    mask, fallback = _window_mask(rs, Ns, window, n_points, saturation)
    x, y = rs[mask], np.log(Ns[mask])
    if len(x) < 3:
        raise FitError("fit window holds fewer than 3 points")
    if np.ptp(x) == 0:
        raise FitError("zero variance in r over the fit window")
    if np.ptp(y) == 0:
        # flat counts: report an exact zero rather than least-squares round-off
        return Fit(0.0, 0.0, float(y[0]), 0.0, tuple(float(v) for v in x), fallback)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return Fit(max(0.0, float(slope)), float(slope), float(intercept), resid, tuple(float(v) for v in x), fallback)


# -- estimators --------------------------------------------------------------------------


def _check_grid(name, grid):
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError(f"{name} must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} must be strictly ascending")
    if grid[0] <= 0:
        raise ValueError(f"{name} must be positive")
    return grid


def _fit_profile(counts, epsilons, window, n_points, saturation):
    slopes = {}
    for eps in epsilons:
        sub = [c for c in counts if c.epsilon == eps]
        slopes[eps] = entropy_from_counts(sub, window, n_points, saturation)
    return slopes


def estimate_entropy(
    g: GeometricStructure,
    r_grid,
    epsilon_grid,
    T: int = 1,
    mode="exhaustive",
    q: int = DEFAULT_Q,
    quantum: float | None = None,
    snap_tolerance: float | None = None,
    method: str = "greedy",
    window="upper-half",
    saturation: float = 0.25,
    compute_H: bool = False,
    floor: float | None = None,
    dense: bool | None = None,
    lemma_rhos=None,
    jobs: int = 1,
    budget: int = PATH_BUDGET,
) -> EntropyEstimate:
    """Move graphs per r, pursuit distances, separated counts and slope fits.

    The headline ``h`` is the slope at the smallest epsilon above the
    discretization floor (default ``2 * mesh_scale``: every pair of sample
    points is at least that far apart in ``d_r``, so smaller scales count
    sample points rather than structure).
    """
    r_grid = _check_grid("r_grid", r_grid)
    epsilons = _check_grid("epsilon_grid", epsilon_grid)
    m = g.manifold
    n = len(m)
    if floor is None:
        floor = 2.0 * m.mesh_scale
    trusted = [e for e in epsilons if e > floor]
    if not trusted:
        raise ValueError(f"every epsilon is at or below the discretization floor {floor!r}")
    if quantum is None:
        quantum = default_quantum(r_grid[0], g.norm_scale, q)
    spec = GraphSpec(int(T), int(q), quantum, snap_tolerance)
    if dense is None:
        dense = n <= DENSE_LIMIT
    labels = leaf_labels(spec.build(g, r_grid[-1])) if compute_H else None

    counts, H_counts = [], []
    dropped, exact_pairs, total_pairs = {}, 0, 0
    H_violations = {}
    for r in r_grid:
        if dense:
            mat = d_r_matrix(g, r, T, mode, q, quantum, snap_tolerance, jobs, budget)
            npairs = n * (n - 1) // 2
            nexact = int(np.triu(mat.exact, 1).sum())
        else:
            mat = sparse_pursuit(g, r, epsilons[-1], T, mode, "d_r", q, quantum, snap_tolerance, jobs=jobs,
                                 budget=budget)
            npairs, nexact = len(mat.values), int(mat.exact.sum())
        dropped[r] = mat.meta["dropped_edges"]
        exact_pairs += nexact
        total_pairs += npairs
        for eps in epsilons:
            c = max_separated(mat, eps, method)
            counts.append(SeparatedCount(r, eps, c.N, method))
        if compute_H:
            if dense:
                hm = D_r_matrix(g, r, T, mode, None, r_grid[-1], q, quantum, snap_tolerance)
                H_violations[r] = hm.meta["triangle_violations"]
            else:
                hm = sparse_pursuit(g, r, epsilons[-1], T, mode, "D_r", q, quantum, snap_tolerance, labels=labels)
            for eps in epsilons:
                c = max_separated(hm, eps, method)
                H_counts.append(SeparatedCount(r, eps, c.N, method))

    slopes = _fit_profile(counts, epsilons, window, n, saturation)
    h = slopes[trusted[0]].slope
    H = H_slopes = None
    if compute_H:
        H_slopes = _fit_profile(H_counts, epsilons, window, n, saturation)
        H = H_slopes[trusted[0]].slope
    diag = {
        "floor": float(floor),
        "trusted_epsilons": trusted,
        "headline_epsilon": trusted[0],
        "window": window if isinstance(window, str) else list(window),
        "quantum": float(quantum),
        "T": int(T),
        "q": int(q),
        "mode": mode if isinstance(mode, str) else ":".join(str(v) for v in mode),
        "method": method,
        "dense": bool(dense),
        "dropped_edges": {repr(k): int(v) for k, v in dropped.items()},
        "exact_pairs": int(exact_pairs),
        "total_pairs": int(total_pairs),
        "all_exact": bool(exact_pairs == total_pairs),
        "fit_fallback": any(f.fallback for f in slopes.values()),
    }
    if compute_H:
        diag["unbounded_pursuer"] = "same-leaf cliques at the largest r"
        if H_violations:
            diag["D_r_triangle_violations"] = {repr(k): int(v) for k, v in H_violations.items()}
    if lemma_rhos is not None:
        diag["lemma_constant"] = lemma_constant(g, T, lemma_rhos, q=q, snap_tolerance=snap_tolerance)
    return EntropyEstimate(epsilons, slopes, h, counts, H, H_slopes, H_counts or None, False, diag)


def local_entropy(
    g: GeometricStructure,
    K_set,
    U,
    V,
    r_grid,
    epsilon_grid,
    T: int = 1,
    mode="exhaustive",
    q: int = DEFAULT_Q,
    quantum: float | None = None,
    snap_tolerance: float | None = None,
    method: str = "greedy",
    window="upper-half",
    floor: float | None = None,
    budget: int = PATH_BUDGET,
) -> EntropyEstimate:
    """Entropy of the confined metric over ``U`` (evader in ``U``, pursuer in ``V``)."""
    K_set, U, V = (set(int(v) for v in s) for s in (K_set, U, V))
    if not K_set or not U or not V:
        raise ValueError("K, U and V must be nonempty")
    if not (K_set <= U <= V):
        raise ValueError("need K a subset of U and U a subset of V")
    r_grid = _check_grid("r_grid", r_grid)
    epsilons = _check_grid("epsilon_grid", epsilon_grid)
    m = g.manifold
    if floor is None:
        floor = 2.0 * m.mesh_scale
    trusted = [e for e in epsilons if e > floor]
    if not trusted:
        raise ValueError(f"every epsilon is at or below the discretization floor {floor!r}")
    if quantum is None:
        quantum = default_quantum(r_grid[0], g.norm_scale, q)
    counts = []
    exact = True
    for r in r_grid:
        mat = local_d_r_matrix(g, r, T, sorted(U), sorted(V), mode, q, quantum, snap_tolerance, budget)
        exact &= mat.all_exact
        for eps in epsilons:
            c = max_separated(mat, eps, method)
            counts.append(SeparatedCount(r, eps, c.N, method))
    slopes = _fit_profile(counts, epsilons, window, len(U), 0.25)
    diag = {"floor": float(floor), "trusted_epsilons": trusted, "headline_epsilon": trusted[0],
            "U_size": len(U), "V_size": len(V), "K_size": len(K_set), "all_exact": bool(exact),
            "quantum": float(quantum)}
    return EntropyEstimate(epsilons, slopes, slopes[trusted[0]].slope, counts, local=True, diagnostics=diag)


# -- independent flow entropy ------------------------------------------------------------


def _field_values(fld, m: SampledManifold) -> np.ndarray:
    if isinstance(fld, GeometricStructure):
        return np.array(fld.gen_velocity[fld.gen_ptr[:-1]], dtype=np.float64)
    if callable(fld):
        return np.array([fld(i) for i in range(len(m))], dtype=np.float64).reshape(len(m), -1)
    return np.asarray(fld, dtype=np.float64).reshape(len(m), -1)


def flow_map(fld, m: SampledManifold, dt: float, snap_tolerance: float | None = None) -> np.ndarray:
    """Time-``dt`` flow map on sample ids: straight step along ``X`` then snap."""
    X = _field_values(fld, m)
    tol = m.mesh_scale if snap_tolerance is None else snap_tolerance
    end = m.advance(m.coords, X, dt)
    ids, dist = snap_many(m, end)
    bad = int(np.count_nonzero(dist > tol * (1 + 1e-9) + 1e-15))
    if bad:
        raise ValueError(f"{bad} flow steps leave the snap tolerance {tol!r}; refine dt or the mesh")
    return ids


def bowen_dinaburg(
    fld,
    m: SampledManifold,
    r_grid,
    epsilon_grid,
    dt: float | None = None,
    q: int = DEFAULT_Q,
    method: str = "greedy",
    window="upper-half",
    saturation: float = 0.25,
    snap_tolerance: float | None = None,
) -> BowenDinaburgEstimate:
    """Topological entropy of a flow from separated sets of ``max_{t<=r} d(phi_t x, phi_t y)``.

    The flow is the iterated time-``dt`` map (default ``dt = r_grid[0] / q``);
    no pursuit is involved.
    """
    r_grid = _check_grid("r_grid", r_grid)
    epsilons = _check_grid("epsilon_grid", epsilon_grid)
    if dt is None:
        dt = r_grid[0] / q
    fmap = flow_map(fld, m, dt, snap_tolerance)
    table = m.metric_table()
    n = len(m)
    # the orbit metric dominates d, so only pairs closer than the largest epsilon can conflict
    pairs = m.neighbor_pairs(epsilons[-1])
    counts = []
    for r in r_grid:
        steps = int(np.floor(r / dt + 1e-9))
        vals = kernels.orbit_max(fmap, steps, table, pairs[:, 0], pairs[:, 1])
        mat = SparsePursuit(n, pairs, vals, np.ones(len(vals), dtype=bool), epsilons[-1], "bowen-dinaburg", r, steps)
        for eps in epsilons:
            c = max_separated(mat, eps, method)
            counts.append(SeparatedCount(r, eps, c.N, method))
    slopes = _fit_profile(counts, epsilons, window, n, saturation)
    floor = m.mesh_scale
    trusted = [e for e in epsilons if e > floor] or epsilons
    diag = {"dt": float(dt), "floor": float(floor), "headline_epsilon": trusted[0], "method": method,
            "window": window if isinstance(window, str) else list(window)}
    return BowenDinaburgEstimate(epsilons, slopes, slopes[trusted[0]].slope, counts, diag)


def lemma_constant(g: GeometricStructure, T: int, rho_grid, q: int = DEFAULT_Q,
                   snap_tolerance: float | None = None) -> float:
    """Empirical ``sup_rho sup_path d(end, start) / rho`` over move-graph walks of length ``T``."""
    rho_grid = [float(v) for v in rho_grid]
    if not rho_grid:
        raise ValueError("rho_grid must be nonempty")
    m = g.manifold
    table = m.metric_table()
    best = 0.0
    for rho in rho_grid:
        mg = build_move_graph(g, rho, T, snap_tolerance, q)
        reach = reach_matrix(mg)
        rows = np.repeat(np.arange(reach.shape[0]), np.diff(reach.indptr))
        if len(rows):
            d = kernels._kernels_numpy.table_dist(*table, rows, reach.indices)
            best = max(best, float(d.max()) / rho)
    return best


def reach_matrix(mg) -> sp.csr_matrix:
    """Boolean matrix of nodes reachable by walks of length ``T`` (equivalently ``<= T``)."""
    adj = mg.adjacency().astype(np.float64)
    reach = sp.identity(mg.n_points, format="csr", dtype=np.float64)
    for _ in range(mg.T):
        reach = (reach @ adj).astype(bool).astype(np.float64)
    reach = reach.tocsr()
    reach.sort_indices()
    return reach


def connection_speed(g: GeometricStructure, T: int, rho_grid, q: int = DEFAULT_Q,
                     snap_tolerance: float | None = None) -> np.ndarray:
    """Smallest probe budget on ``rho_grid`` joining each ordered pair by a walk (inf if none)."""
    n = g.n_points
    out = np.full((n, n), np.inf)
    np.fill_diagonal(out, 0.0)
    for rho in sorted(float(v) for v in rho_grid):
        reach = reach_matrix(build_move_graph(g, rho, T, snap_tolerance, q)).toarray().astype(bool)
        out[reach & np.isinf(out)] = rho
    return out
