"""Pursuit-evasion distances on move graphs.

``delta(x, y)`` is the largest distance an evader starting at ``x`` can keep
from the best pursuer starting at ``y``; the pursuer sees the whole evader
walk, so the inner minimum is an exact bottleneck dynamic program and only
the outer maximum needs search (exhaustive or beam).
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .paths import (
    DEFAULT_Q,
    PATH_BUDGET,
    BudgetExceeded,
    MoveGraph,
    build_move_graph,
    clique_graph,
    default_quantum,
    leaf_labels,
    parse_mode,
    walk_counts,
)
from .structure import GeometricStructure

KINDS = ("d_r", "D_r", "local_d_r")


@dataclass(eq=False)
class PursuitMatrix:
    """Dense symmetric pursuit distances with per-pair exactness.

    ``ids`` maps row/column positions to point ids (all points unless the
    matrix is local).
    """

    values: np.ndarray
    exact: np.ndarray
    kind: str
    r: float
    T: int
    mode: str = "exhaustive"
    width: int = 0
    seed: int = 0
    ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def all_exact(self) -> bool:
        return bool(self.exact.all())

    def conflicts(self, epsilon: float):
        """Pairs ``(i, j)``, ``i < j``, closer than ``epsilon`` (positions, not ids)."""
        i, j = np.nonzero(np.triu(self.values < epsilon, k=1))
        return np.stack([i, j], axis=1)

    def to_csv(self, path=None) -> str:
        """CSV with a metadata comment line, header of ids, one row per id."""
        ids = np.arange(self.n) if self.ids is None else self.ids
        buf = io.StringIO()
        buf.write(f"# kind={self.kind} r={self.r!r} T={self.T} mode={self.mode} width={self.width} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id"] + [int(i) for i in ids])
        for a, i in enumerate(ids):
            w.writerow([int(i)] + [repr(float(v)) for v in self.values[a]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass(eq=False)
class SparsePursuit:
    """Pursuit distances for the pairs that can fall below ``cutoff``.

    Every unlisted pair is known to have value ``>= cutoff`` because pursuit
    distances dominate twice the base distance.
    """

    n: int
    pairs: np.ndarray
    values: np.ndarray
    exact: np.ndarray
    cutoff: float
    kind: str
    r: float
    T: int
    mode: str = "exhaustive"
    width: int = 0
    seed: int = 0
    ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def all_exact(self) -> bool:
        return bool(self.exact.all())

    def conflicts(self, epsilon: float):
        if epsilon > self.cutoff * (1 + 1e-12):
            raise ValueError(f"epsilon {epsilon} above the cutoff {self.cutoff} of this sparse matrix")
        return self.pairs[self.values < epsilon]


# -- single evaluations ---------------------------------------------------------------


def pursuit_value(gamma, y: int, pursuer: MoveGraph, confine_pursuer=None) -> float:
    """Exact ``min over pursuer walks mu from y of max_k d(gamma_k, mu_k)``."""
    gamma = np.asarray(gamma, dtype=np.int64)
    if len(gamma) != pursuer.T + 1:
        raise ValueError(f"path has {len(gamma)} nodes, expected T + 1 = {pursuer.T + 1}")
    graph = pursuer
    if confine_pursuer is not None:
        allowed = set(int(v) for v in confine_pursuer)
        if int(y) not in allowed:
            raise ValueError("confinement excludes the pursuer start")
        graph = pursuer.restrict(allowed)
    table = pursuer.manifold.metric_table()
    nodes = np.arange(graph.n_points)
    V = np.full(graph.n_points, np.inf)
    V[y] = kernels._kernels_numpy.table_dist(*table, gamma[0], y)
    src = np.repeat(nodes, graph.out_degree())
    for t in range(1, len(gamma)):
        W = np.full(graph.n_points, np.inf)
        np.minimum.at(W, graph.indices, V[src])
        V = np.maximum(kernels._kernels_numpy.table_dist(*table, gamma[t], nodes), W)
    return float(V.min())


def delta_r(x: int, y: int, evader: MoveGraph, pursuer: MoveGraph, mode="exhaustive", confinement=None,
            budget: int = PATH_BUDGET):
    """``(value, exact)`` for one ordered pair.

    ``confinement = (U, V)`` keeps the evader inside ``U`` and the pursuer
    inside ``V``.
    """
    if confinement is not None:
        U, V = confinement
        if x not in set(int(u) for u in U) or y not in set(int(v) for v in V):
            raise ValueError("x must lie in U and y in V")
        evader, pursuer = evader.restrict(U), pursuer.restrict(V)
    vals, exact = _delta_pairs(np.array([x]), np.array([y]), evader, pursuer, mode, budget)
    return float(vals[0]), bool(exact[0])


def beam_paths(evader: MoveGraph, pursuer: MoveGraph, x: int, y: int, width: int, seed: int = 0):
    table = evader.manifold.metric_table()
    paths, _, _ = kernels.beam_layers(evader, pursuer, table, x, y, width, seed)
    for p in paths:
        yield np.array(p, dtype=np.int64)


def _delta_pairs(xs, ys, evader, pursuer, mode, budget=PATH_BUDGET, jobs: int = 1):
    kind, width, seed = parse_mode(mode)
    if evader.T != pursuer.T:
        raise ValueError("evader and pursuer graphs must use the same T")
    if len(xs) == 0:
        return np.zeros(0), np.ones(0, dtype=bool)
    if kind == "exhaustive":
        counts = walk_counts(evader, evader.T)
        worst = counts[np.unique(xs)].max()
        if worst > budget:
            raise BudgetExceeded(
                f"exhaustive search needs up to {worst:.0f} evader walks per pair (budget {budget}); "
                "use --mode beam:<width>"
            )
        width = 0
    table = evader.manifold.metric_table()
    if jobs <= 1 or len(xs) < 256:
        return kernels.delta_batch(xs, ys, evader, pursuer, table, evader.T, width, seed)
    chunks = np.array_split(np.arange(len(xs)), jobs * 4)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(
            lambda c: kernels.delta_batch(xs[c], ys[c], evader, pursuer, table, evader.T, width, seed), chunks
        ))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# -- graphs ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    """Move-graph discretization shared by every budget of a sweep."""

    T: int = 1
    q: int = DEFAULT_Q
    quantum: float | None = None
    snap_tolerance: float | None = None

    def build(self, g: GeometricStructure, r: float) -> MoveGraph:
        quantum = self.quantum if self.quantum is not None else default_quantum(r, g.norm_scale, self.q)
        return build_move_graph(g, r, self.T, self.snap_tolerance, self.q, quantum)


def _spec(T, q, quantum, snap_tolerance):
    return GraphSpec(int(T), int(q), quantum, snap_tolerance)


def _mode_meta(mode):
    kind, width, seed = parse_mode(mode)
    return kind, width, seed


# -- matrices --------------------------------------------------------------------------


def _all_ordered_pairs(ids):
    ids = np.asarray(ids, dtype=np.int64)
    a, b = np.meshgrid(ids, ids, indexing="ij")
    off = a != b
    return a[off], b[off]


def _symmetrize(n, xs, ys, vals, exact, pos=None):
    """Sum ``delta(x, y) + delta(y, x)`` into a dense matrix indexed by ``pos``."""
    pos = np.arange(n) if pos is None else pos
    px, py = pos[xs], pos[ys]
    values = np.zeros((n, n))
    ex = np.ones((n, n), dtype=bool)
    np.add.at(values, (px, py), vals)
    np.add.at(values, (py, px), vals)
    np.logical_and.at(ex, (px, py), exact)
    np.logical_and.at(ex, (py, px), exact)
    return values, ex


def d_r_matrix(g: GeometricStructure, r: float, T: int = 1, mode="exhaustive", q: int = DEFAULT_Q,
               quantum: float | None = None, snap_tolerance: float | None = None, jobs: int = 1,
               budget: int = PATH_BUDGET) -> PursuitMatrix:
    """Dense ``d_r = delta_r + delta_r^T`` with evader and pursuer at budget ``r``."""
    mg = _spec(T, q, quantum, snap_tolerance).build(g, r)
    n = len(g.manifold)
    xs, ys = _all_ordered_pairs(np.arange(n))
    vals, exact = _delta_pairs(xs, ys, mg, mg, mode, budget, jobs)
    values, ex = _symmetrize(n, xs, ys, vals, exact)
    kind, width, seed = _mode_meta(mode)
    return PursuitMatrix(values, ex, "d_r", float(r), int(T), kind, width, seed,
                         meta={"dropped_edges": mg.dropped, "quantum": mg.quantum})


def unbounded_delta(evader: MoveGraph, labels: np.ndarray, xs, ys) -> np.ndarray:
    """Pursuit values against a pursuer that may jump anywhere in its leaf each step.

    With a clique pursuer the bottleneck program collapses to
    ``max(d(x, y), max over z reachable from x of dist(z, leaf(y)))``.
    """
    m = evader.manifold
    table = m.metric_table()
    tdist = kernels._kernels_numpy.table_dist
    n = evader.n_points
    labels = np.asarray(labels, dtype=np.int64)
    needed = np.unique(labels[np.asarray(ys)])
    leafdist = np.full((n, labels.max() + 1), np.inf)
    allnodes = np.arange(n)
    for lab in needed:
        members = np.flatnonzero(labels == lab)
        col = np.full(n, np.inf)
        for lo in range(0, len(members), 64):
            blk = members[lo : lo + 64]
            col = np.minimum(col, tdist(*table, allnodes[:, None], blk[None, :]).min(axis=1))
        leafdist[:, lab] = col
    adj = evader.adjacency().astype(np.float64)
    reach = sp.identity(n, format="csr")
    for _ in range(evader.T):
        reach = (reach @ adj).astype(bool).astype(np.float64)
    reach = reach.tocsr()
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    out = tdist(*table, xs, ys).astype(np.float64)
    for x in np.unique(xs):
        sel = np.flatnonzero(xs == x)
        z = reach.indices[reach.indptr[x] : reach.indptr[x + 1]]
        far = leafdist[z][:, labels[ys[sel]]].max(axis=0)
        out[sel] = np.maximum(out[sel], far)
    return out


def D_r_matrix(g: GeometricStructure, r: float, T: int = 1, mode="exhaustive", pursuer_speed=None,
               r_probe: float | None = None, q: int = DEFAULT_Q, quantum: float | None = None,
               snap_tolerance: float | None = None, jobs: int = 1, budget: int = PATH_BUDGET) -> PursuitMatrix:
    """``D_r = Delta_r + Delta_r^T`` with a faster (default: unbounded) pursuer.

    The unbounded pursuer moves freely inside the leaves of the move graph at
    the probe budget ``r_probe`` (default ``r``).  The closed form is exact,
    so the matrix is flagged exact whatever ``mode`` says.  Triangle
    violations are counted in ``meta``.
    """
    spec = _spec(T, q, quantum, snap_tolerance)
    if quantum is None:
        spec = _spec(T, q, default_quantum(r, g.norm_scale, q), snap_tolerance)
    mg = spec.build(g, r)
    n = len(g.manifold)
    xs, ys = _all_ordered_pairs(np.arange(n))
    kind, width, seed = _mode_meta(mode)
    if pursuer_speed is None or np.isinf(pursuer_speed):
        labels = leaf_labels(spec.build(g, r_probe if r_probe is not None else r))
        vals = unbounded_delta(mg, labels, xs, ys)
        exact = np.ones(len(xs), dtype=bool)
        pursuer_desc = "unbounded"
    else:
        if pursuer_speed < r:
            raise ValueError("pursuer_speed must be at least r")
        pg = spec.build(g, pursuer_speed)
        vals, exact = _delta_pairs(xs, ys, mg, pg, mode, budget, jobs)
        pursuer_desc = repr(float(pursuer_speed))
    values, ex = _symmetrize(n, xs, ys, vals, exact)
    meta = {"pursuer": pursuer_desc, "triangle_violations": triangle_violations(values),
            "dropped_edges": mg.dropped, "quantum": mg.quantum}
    return PursuitMatrix(values, ex, "D_r", float(r), int(T), kind, width, seed, meta=meta)


def local_d_r_matrix(g: GeometricStructure, r: float, T: int, U, V, mode="exhaustive", q: int = DEFAULT_Q,
                     quantum: float | None = None, snap_tolerance: float | None = None,
                     budget: int = PATH_BUDGET) -> PursuitMatrix:
    """Confined ``d_r`` over ``U``: evader walks stay in ``U``, pursuer walks in ``V``."""
    U = np.unique(np.asarray(list(U), dtype=np.int64))
    V = np.unique(np.asarray(list(V), dtype=np.int64))
    if len(U) == 0:
        raise ValueError("U must be nonempty")
    if not np.isin(U, V).all():
        raise ValueError("U must be a subset of V")
    mg = _spec(T, q, quantum, snap_tolerance).build(g, r)
    ev, pu = mg.restrict(U), mg.restrict(V)
    xs, ys = _all_ordered_pairs(U)
    vals, exact = _delta_pairs(xs, ys, ev, pu, mode, budget)
    pos = np.full(len(g.manifold), -1, dtype=np.int64)
    pos[U] = np.arange(len(U))
    values, ex = _symmetrize(len(U), xs, ys, vals, exact, pos)
    kind, width, seed = _mode_meta(mode)
    return PursuitMatrix(values, ex, "local_d_r", float(r), int(T), kind, width, seed, ids=U,
                         meta={"V_size": int(len(V)), "dropped_edges": mg.dropped})


def sparse_pursuit(g: GeometricStructure, r: float, cutoff: float, T: int = 1, mode="exhaustive",
                   kind: str = "d_r", q: int = DEFAULT_Q, quantum: float | None = None,
                   snap_tolerance: float | None = None, r_probe: float | None = None, jobs: int = 1,
                   budget: int = PATH_BUDGET, graph: MoveGraph | None = None, labels=None) -> SparsePursuit:
    """``d_r`` or ``D_r`` restricted to pairs with base distance below ``cutoff / 2``.

    Both quantities dominate twice the base distance, so every other pair
    is at least ``cutoff`` apart.
    """
    spec = _spec(T, q, quantum if quantum is not None else default_quantum(r, g.norm_scale, q), snap_tolerance)
    mg = graph if graph is not None else spec.build(g, r)
    m = g.manifold
    pairs = m.neighbor_pairs(cutoff / 2.0)
    xs = np.concatenate([pairs[:, 0], pairs[:, 1]])
    ys = np.concatenate([pairs[:, 1], pairs[:, 0]])
    if kind == "d_r":
        vals, exact = _delta_pairs(xs, ys, mg, mg, mode, budget, jobs)
    elif kind == "D_r":
        if labels is None:
            labels = leaf_labels(spec.build(g, r_probe if r_probe is not None else r))
        vals = unbounded_delta(mg, labels, xs, ys)
        exact = np.ones(len(xs), dtype=bool)
    else:
        raise ValueError(f"unsupported kind {kind!r}")
    k = len(pairs)
    values = vals[:k] + vals[k:]
    ex = exact[:k] & exact[k:]
    mkind, width, seed = _mode_meta(mode)
    return SparsePursuit(len(m), pairs, values, ex, float(cutoff), kind, float(r), int(T), mkind, width, seed,
                         meta={"dropped_edges": mg.dropped, "quantum": mg.quantum})


def triangle_violations(values: np.ndarray, tol: float = 1e-12) -> int:
    """Number of ordered triples with ``v[i, j] > v[i, k] + v[k, j]``."""
    n = values.shape[0]
    count = 0
    scale = tol * max(float(values.max(initial=0.0)), 1.0)
    for k in range(n):
        count += int(np.count_nonzero(values > values[:, k, None] + values[None, k, :] + scale))
    return count
