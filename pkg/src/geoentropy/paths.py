"""Time-discretized move graphs and evader path enumeration.

A move graph joins ``x`` to the snapped endpoint of every admissible step
of duration ``1/T``.  Speed levels are multiples ``k * u`` of an absolute
quantum ``u`` (in unscaled norm units), so the edge set only grows with the
budget ``r`` and scaling every norm by ``gamma`` while multiplying ``r`` by
``gamma`` reproduces the identical edge set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .manifold import snap_many
from .structure import GeometricStructure

DEFAULT_Q = 2
PATH_BUDGET = 1_000_000
_LEVEL_EPS = 1e-9
_SNAP_RTOL = 1e-9


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the path budget; use beam mode."""


def canonical(x: float) -> float:
    """Round to 12 significant digits so products and quotients by gamma agree."""
    return float(f"{x:.12g}")


@dataclass(frozen=True, eq=False)
class MoveGraph:
    """CSR move relation with per-edge provenance.

    ``indices[indptr[x]:indptr[x+1]]`` lists successors of ``x`` in ascending
    order.  ``edge_generator`` / ``edge_level`` record the first generator
    and speed level producing each edge (``-1`` / ``0`` for self-loops,
    ``-2`` for edges of a product graph).
    """

    manifold: object
    r: float
    T: int
    indptr: np.ndarray
    indices: np.ndarray
    edge_generator: np.ndarray
    edge_level: np.ndarray
    snap_tolerance: float
    quantum: float
    q: int
    dropped: int = 0

    @property
    def n_points(self):
        return len(self.indptr) - 1

    @property
    def n_edges(self):
        return len(self.indices)

    def successors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x] : self.indptr[x + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def adjacency(self) -> sp.csr_matrix:
        n = self.n_points
        return sp.csr_matrix((np.ones(self.n_edges, dtype=bool), self.indices, self.indptr), shape=(n, n))

    def edge_set(self) -> set:
        src = np.repeat(np.arange(self.n_points), self.out_degree())
        return set(zip(src.tolist(), self.indices.tolist()))

    def has_self_loops(self) -> bool:
        src = np.repeat(np.arange(self.n_points), self.out_degree())
        return bool(np.all(np.bincount(src[src == self.indices], minlength=self.n_points) == 1))

    def restrict(self, keep) -> "MoveGraph":
        """Subgraph on the node set ``keep`` (ids preserved; other nodes keep only self-loops)."""
        mask = np.zeros(self.n_points, dtype=bool)
        mask[np.asarray(list(keep), dtype=np.int64)] = True
        src = np.repeat(np.arange(self.n_points), self.out_degree())
        ok = (mask[src] & mask[self.indices]) | (src == self.indices)
        counts = np.bincount(src[ok], minlength=self.n_points)
        ptr = np.zeros(self.n_points + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return MoveGraph(
            self.manifold, self.r, self.T, ptr, self.indices[ok], self.edge_generator[ok], self.edge_level[ok],
            self.snap_tolerance, self.quantum, self.q, self.dropped,
        )


def speed_levels(r: float, scale: float, quantum: float) -> int:
    """Number of admissible speed levels ``k`` with ``scale * k * quantum <= r``."""
    return int(np.floor(r / (scale * quantum) + _LEVEL_EPS))


def default_quantum(r_min: float, scale: float = 1.0, q: int = DEFAULT_Q) -> float:
    return canonical(r_min / (q * scale))


def build_move_graph(
    g: GeometricStructure,
    r: float,
    T: int,
    snap_tolerance: float | None = None,
    q: int = DEFAULT_Q,
    quantum: float | None = None,
) -> MoveGraph:
    """Move graph of ``g`` at speed budget ``r`` with ``T`` steps on [0, 1].

    ``quantum`` defaults to ``r / (q * norm_scale)``, which yields the speed
    fractions ``1/q, 2/q, ..., 1`` of the budget.  Sweeps over several
    budgets should pass a shared quantum (see :func:`default_quantum`).
    """
    if not r > 0:
        raise ValueError("speed budget r must be positive")
    if int(T) != T or T < 1:
        raise ValueError("T must be a positive integer")
    if q < 1:
        raise ValueError("q must be >= 1")
    if snap_tolerance is None:
        snap_tolerance = g.manifold.mesh_scale
    if snap_tolerance < 0:
        raise ValueError("snap_tolerance must be nonnegative")
    if quantum is None:
        quantum = default_quantum(r, g.norm_scale, q)
    return _build(g, g.norm_scale, float(r), int(T), float(snap_tolerance), int(q), float(quantum))


def _build(g, scale, r, T, tol, q, quantum) -> MoveGraph:
    m = g.manifold
    n = len(m)
    if g.components:
        g1, g2 = g.components
        a = _build(g1, scale * g1.norm_scale, r, T, tol, q, quantum / g1.norm_scale)
        b = _build(g2, scale * g2.norm_scale, r, T, tol, q, quantum / g2.norm_scale)
        adj = sp.kron(a.adjacency(), b.adjacency(), format="csr").astype(bool)
        adj.sort_indices()
        nnz = adj.nnz
        src = np.repeat(np.arange(n), np.diff(adj.indptr))
        gen = np.where(src == adj.indices, -1, -2).astype(np.int64)
        return MoveGraph(m, r, T, adj.indptr.astype(np.int64), adj.indices.astype(np.int64), gen,
                         np.zeros(nnz, dtype=np.int64), tol, quantum, q, a.dropped * b.n_points + b.dropped * a.n_points)

    levels = speed_levels(r, scale, quantum)
    counts = np.diff(g.gen_ptr)
    owner = np.repeat(np.arange(n), counts)
    moving = (g.gen_norm > 0) & np.any(g.gen_velocity != 0, axis=1)
    gen_ids = np.flatnonzero(moving)
    src_parts = [np.arange(n)]
    dst_parts = [np.arange(n)]
    gen_parts = [np.full(n, -1, dtype=np.int64)]
    lev_parts = [np.zeros(n, dtype=np.int64)]
    dropped = 0
    dt = 1.0 / T
    if levels > 0 and len(gen_ids):
        for k in range(1, levels + 1):
            vel = (k * quantum / g.gen_norm[gen_ids])[:, None] * g.gen_velocity[gen_ids]
            start = m.coords[owner[gen_ids]]
            end = m.advance(start, vel, dt)
            ids, dist = snap_many(m, end)
            ok = dist <= tol * (1.0 + _SNAP_RTOL) + 1e-15
            dropped += int((~ok).sum())
            src_parts.append(owner[gen_ids][ok])
            dst_parts.append(ids[ok])
            gen_parts.append(gen_ids[ok])
            lev_parts.append(np.full(int(ok.sum()), k, dtype=np.int64))
    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    gen = np.concatenate(gen_parts)
    lev = np.concatenate(lev_parts)
    # keep the first provenance per (src, dst): self-loops first, then lowest level, then generator
    order = np.lexsort((gen, lev, dst, src))
    src, dst, gen, lev = src[order], dst[order], gen[order], lev[order]
    first = np.ones(len(src), dtype=bool)
    first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
    src, dst, gen, lev = src[first], dst[first], gen[first], lev[first]
    gen = np.where(src == dst, -1, gen)
    lev = np.where(src == dst, 0, lev)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
    return MoveGraph(m, r, T, ptr, dst.astype(np.int64), gen, lev, tol, quantum, q, dropped)


def clique_graph(labels: np.ndarray, like: MoveGraph | None = None, manifold=None, T: int = 1) -> MoveGraph:
    """Pursuer graph with unbounded speed: every node reaches its whole leaf in one step."""
    labels = np.asarray(labels)
    n = len(labels)
    order = np.lexsort((np.arange(n), labels))
    members = {}
    for i in order:
        members.setdefault(int(labels[i]), []).append(int(i))
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(members[int(labels[i])]) for i in range(n)])
    idx = np.concatenate([np.array(members[int(labels[i])], dtype=np.int64) for i in range(n)])
    src = np.repeat(np.arange(n), np.diff(ptr))
    gen = np.where(src == idx, -1, -3).astype(np.int64)
    m = like.manifold if like is not None else manifold
    T = like.T if like is not None else T
    tol = like.snap_tolerance if like is not None else 0.0
    quantum = like.quantum if like is not None else 0.0
    q = like.q if like is not None else DEFAULT_Q
    return MoveGraph(m, np.inf, T, ptr, idx, gen, np.zeros(len(idx), dtype=np.int64), tol, quantum, q, 0)


def leaf_labels(mg: MoveGraph) -> np.ndarray:
    """Component label of every node in the symmetric closure of ``mg``."""
    _, labels = connected_components(mg.adjacency(), directed=True, connection="weak")
    return labels.astype(np.int64)


def leaf_partition(g_or_mg, r: float | None = None, T_probe: int = 1, **kwargs) -> list:
    """Discrete leaves: components of the move graph at a probe budget.

    Accepts a prebuilt :class:`MoveGraph`, or a structure plus the probe
    budget ``r`` (normally the largest budget of the experiment grid).
    """
    if isinstance(g_or_mg, MoveGraph):
        mg = g_or_mg
    else:
        if r is None:
            raise ValueError("a probe budget r is required when passing a structure")
        mg = build_move_graph(g_or_mg, r, T_probe, **kwargs)
    labels = leaf_labels(mg)
    parts = [np.flatnonzero(labels == c) for c in range(labels.max() + 1)]
    parts.sort(key=lambda a: a[0])
    return parts


def walk_counts(mg: MoveGraph, steps: int) -> np.ndarray:
    """Number of length-``steps`` walks starting at each node (float64)."""
    adj = mg.adjacency().astype(np.float64)
    c = np.ones(mg.n_points)
    for _ in range(steps):
        c = adj @ c
    return c


def reach_sets(mg: MoveGraph, x: int, steps: int) -> list:
    """Nodes reachable from ``x`` in exactly ``t`` steps for ``t = 0..steps`` (nested by self-loops)."""
    layers = [np.array([x], dtype=np.int64)]
    cur = layers[0]
    for _ in range(steps):
        nxt = np.unique(np.concatenate([mg.successors(v) for v in cur]))
        layers.append(nxt)
        cur = nxt
    return layers


def parse_mode(mode) -> tuple:
    """Normalize ``"exhaustive"``, ``"beam:W"`` or ``("beam", W[, seed])`` to ``(kind, width, seed)``."""
    if mode is None or mode == "exhaustive":
        return ("exhaustive", 0, 0)
    if isinstance(mode, str):
        if mode.startswith("beam:"):
            parts = mode.split(":")
            width = int(parts[1])
            seed = int(parts[2]) if len(parts) > 2 else 0
            mode = ("beam", width, seed)
        else:
            raise ValueError(f"unknown solver mode {mode!r}")
    kind = mode[0]
    if kind != "beam":
        raise ValueError(f"unknown solver mode {mode!r}")
    width = int(mode[1])
    seed = int(mode[2]) if len(mode) > 2 else 0
    if width < 1:
        raise ValueError("beam width must be >= 1")
    return ("beam", width, seed)


def enumerate_evader_paths(
    mg: MoveGraph,
    x: int,
    mode="exhaustive",
    budget: int = PATH_BUDGET,
    y: int | None = None,
    pursuer: MoveGraph | None = None,
) -> Iterator[np.ndarray]:
    """Yield length-T walks from ``x`` as node arrays of length ``T + 1``.

    Exhaustive mode yields every walk once, in lexicographic order of
    successor ids.  Beam mode keeps the ``width`` best prefixes per depth,
    ranked by their pursuit value against a pursuer starting at ``y`` (the
    same ranking the solver uses); ``y`` defaults to ``x``.
    """
    kind, width, seed = parse_mode(mode)
    T = mg.T
    if kind == "exhaustive":
        total = walk_counts(mg, T)[x]
        if total > budget:
            raise BudgetExceeded(f"{total:.0f} walks from node {x} exceed the budget {budget}; switch to beam mode")
        yield from _dfs_paths(mg, x, T)
        return
    from .pursuit import beam_paths

    yield from beam_paths(mg, pursuer if pursuer is not None else mg, x, x if y is None else y, width, seed)


def _dfs_paths(mg, x, T):
    path = np.empty(T + 1, dtype=np.int64)
    path[0] = x
    if T == 0:
        yield path.copy()
        return
    pos = np.zeros(T + 1, dtype=np.int64)
    depth = 1
    pos[1] = mg.indptr[x]
    while depth > 0:
        parent = path[depth - 1]
        if pos[depth] >= mg.indptr[parent + 1]:
            depth -= 1
            continue
        path[depth] = mg.indices[pos[depth]]
        pos[depth] += 1
        if depth == T:
            yield path.copy()
        else:
            depth += 1
            pos[depth] = mg.indptr[path[depth - 1]]
