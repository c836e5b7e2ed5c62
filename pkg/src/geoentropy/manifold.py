"""Finite metric-space samples of compact manifolds.

Every sample carries chart coordinates, an exact base metric and the stepping
rule (``advance``) that the move-graph builder uses to push points along
tangent vectors.  Snapping maps arbitrary chart coordinates back to the
nearest sample point, ties going to the smallest id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform
import scipy.sparse as sp

POINT_BUDGET = 10_000
EXHAUSTIVE_TRIANGLE_LIMIT = 400
_TIE_RTOL = 1e-9
_TIE_ATOL = 1e-12

CAT_MAP = np.array([[2, 1], [1, 1]], dtype=np.int64)

TOPOLOGIES = ("torus-n", "circle", "sphere2", "interval", "product", "shell", "mapping-torus")


class MetricError(ValueError):
    """Raised when a constructed base metric violates a metric axiom."""


class BudgetError(ValueError):
    """Raised when a construction would exceed the point budget."""


@dataclass(frozen=True, eq=False)
class SampledManifold:
    """Immutable point sample of a compact manifold.

    ``coords`` are chart coordinates (one row per point id).  Products keep
    their factors and store the max metric factorized; ``base_metric`` is
    materialized on demand.
    """

    coords: np.ndarray
    topology: str
    params: dict = field(default_factory=dict)
    factors: tuple = ()
    _metric: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.coords.setflags(write=False)
        if self._metric is not None:
            self._metric.setflags(write=False)

    def __len__(self):
        return self.coords.shape[0]

    @property
    def n_points(self):
        return self.coords.shape[0]

    @property
    def chart_dim(self):
        return self.coords.shape[1]

    @cached_property
    def base_metric(self) -> np.ndarray:
        if self._metric is not None:
            return self._metric
        f1, f2 = self.factors
        n1, n2 = len(f1), len(f2)
        d1 = np.repeat(np.repeat(f1.base_metric, n2, axis=0), n2, axis=1)
        d2 = np.tile(f2.base_metric, (n1, n1))
        out = np.maximum(d1, d2)
        out.setflags(write=False)
        return out

    @cached_property
    def mesh_scale(self) -> float:
        if self.topology == "product":
            return min(f.mesh_scale for f in self.factors)
        d = self._metric
        return float(np.min(d + np.diag(np.full(len(d), np.inf))))

    @cached_property
    def diameter(self) -> float:
        if self.topology == "product":
            return max(f.diameter for f in self.factors)
        return float(self._metric.max())

    def distance(self, i: int, j: int) -> float:
        if self.topology == "product":
            n2 = len(self.factors[1])
            return max(self.factors[0].distance(i // n2, j // n2), self.factors[1].distance(i % n2, j % n2))
        return float(self._metric[i, j])

    # -- factor bookkeeping used by the kernels -------------------------------------

    @cached_property
    def leaf_factors(self) -> tuple:
        if self.topology != "product":
            return (self,)
        return self.factors[0].leaf_factors + self.factors[1].leaf_factors

    def metric_table(self):
        """Flattened factor metrics ``(flat, sizes, strides, offsets)``.

        ``d(i, j) = max_f flat[off_f + i_f * n_f + j_f]`` with
        ``i_f = (i // stride_f) % n_f``.
        """
        leaves = self.leaf_factors
        sizes = np.array([len(f) for f in leaves], dtype=np.int64)
        strides = np.ones(len(leaves), dtype=np.int64)
        for k in range(len(leaves) - 2, -1, -1):
            strides[k] = strides[k + 1] * sizes[k + 1]
        offsets = np.zeros(len(leaves), dtype=np.int64)
        offsets[1:] = np.cumsum(sizes[:-1] ** 2)
        flat = np.concatenate([np.ascontiguousarray(f._metric, dtype=np.float64).ravel() for f in leaves])
        return flat, sizes, strides, offsets

    # -- stepping --------------------------------------------------------------------

    def advance(self, coords: np.ndarray, velocity: np.ndarray, dt: float) -> np.ndarray:
        """Move chart coordinates along ``velocity`` for time ``dt``.

        Rows are independent; the topology decides how coordinates wrap.
        """
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        velocity = np.atleast_2d(np.asarray(velocity, dtype=np.float64))
        topo = self.topology
        if topo in ("torus-n", "circle"):
            return _wrap_unit(coords + velocity * dt)
        if topo == "interval":
            return coords + velocity * dt
        if topo == "sphere2":
            return _sphere_step(coords, velocity, dt)
        if topo == "shell":
            return _shell_step(coords, velocity, dt)
        if topo == "mapping-torus":
            return _mapping_torus_step(coords, velocity, dt, np.asarray(self.params["monodromy"]))
        if topo == "product":
            k = self.factors[0].chart_dim
            a = self.factors[0].advance(coords[:, :k], velocity[:, :k], dt)
            b = self.factors[1].advance(coords[:, k:], velocity[:, k:], dt)
            return np.hstack([a, b])
        raise ValueError(f"unknown topology {topo!r}")

    # -- snapping ----------------------------------------------------------------------

    @cached_property
    def _tree(self):
        topo = self.topology
        if topo in ("torus-n", "circle"):
            return cKDTree(self.coords, boxsize=1.0)
        return cKDTree(self._embed(self.coords))

    def _embed(self, coords):
        if self.topology == "mapping-torus":
            return mapping_torus_embedding(coords, np.asarray(self.params["monodromy"]), self.params.get("kappa", 1.0))
        if self.topology in ("torus-n", "circle"):
            return _wrap_unit(coords)
        return coords

    def _from_tree_distance(self, d):
        if self.topology == "sphere2":
            return 2.0 * np.arcsin(np.clip(d / 2.0, 0.0, 1.0))
        return d

    def _to_tree_distance(self, d):
        if self.topology == "sphere2":
            return 2.0 * np.sin(np.minimum(d, np.pi) / 2.0)
        return d

    def nearest_distance(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        if self.topology == "product":
            k = self.factors[0].chart_dim
            return np.maximum(
                self.factors[0].nearest_distance(coords[:, :k]), self.factors[1].nearest_distance(coords[:, k:])
            )
        q = self._query_points(coords)
        d, _ = self._tree.query(q, k=1)
        return self._from_tree_distance(np.asarray(d, dtype=np.float64))

    def smallest_within(self, coords: np.ndarray, radius: np.ndarray) -> np.ndarray:
        """Smallest id whose distance to each row is <= its radius (up to tie tolerance)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), (coords.shape[0],))
        if self.topology == "product":
            k = self.factors[0].chart_dim
            a = self.factors[0].smallest_within(coords[:, :k], radius)
            b = self.factors[1].smallest_within(coords[:, k:], radius)
            return a * len(self.factors[1]) + b
        q = self._query_points(coords)
        rr = self._to_tree_distance(radius) * (1.0 + _TIE_RTOL) + _TIE_ATOL
        kk = min(len(self), 8)
        d, idx = self._tree.query(q, k=kk)
        d = d.reshape(len(q), kk)
        idx = idx.reshape(len(q), kk)
        inside = d <= rr[:, None]
        out = np.where(inside, idx, np.iinfo(np.int64).max).min(axis=1)
        crowded = inside[:, -1] & (kk < len(self))
        for row in np.flatnonzero(crowded):
            hits = self._tree.query_ball_point(q[row], rr[row])
            out[row] = min(hits)
        return out.astype(np.int64)

    def _query_points(self, coords):
        if self.topology in ("torus-n", "circle"):
            return _wrap_unit(coords)
        if self.topology == "sphere2":
            norms = np.linalg.norm(coords, axis=1, keepdims=True)
            return coords / np.where(norms > 0, norms, 1.0)
        return self._embed(coords)

    def distances_to(self, coords: np.ndarray) -> np.ndarray:
        """Base-space distance from one chart point to every sample point."""
        c = np.asarray(coords, dtype=np.float64).reshape(1, -1)
        topo = self.topology
        if topo == "product":
            k = self.factors[0].chart_dim
            a = self.factors[0].distances_to(c[0, :k])
            b = self.factors[1].distances_to(c[0, k:])
            return np.maximum(a[:, None], b[None, :]).ravel()
        if topo in ("torus-n", "circle"):
            return _torus_dist(self.coords, _wrap_unit(c))
        if topo == "sphere2":
            u = self._query_points(c)
            return self._from_tree_distance(np.linalg.norm(self.coords - u, axis=1))
        return np.linalg.norm(self._embed(self.coords) - self._embed(c), axis=1)

    # -- neighbourhoods ------------------------------------------------------------------

    def neighbor_adjacency(self, radius: float) -> sp.csr_matrix:
        """Boolean CSR adjacency of pairs with base distance < radius (diagonal included)."""
        if self.topology == "product":
            a = self.factors[0].neighbor_adjacency(radius)
            b = self.factors[1].neighbor_adjacency(radius)
            return sp.kron(a, b, format="csr").astype(bool)
        n = len(self)
        pairs = self._tree.query_pairs(float(self._to_tree_distance(radius)) * (1 + 1e-9) + 1e-12, output_type="ndarray")
        if len(pairs):
            keep = self._metric[pairs[:, 0], pairs[:, 1]] < radius
            pairs = pairs[keep]
        rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
        adj = sp.csr_matrix((np.ones(len(rows), dtype=bool), (rows, cols)), shape=(n, n))
        adj.sort_indices()
        return adj

    def neighbor_pairs(self, radius: float) -> np.ndarray:
        """Pairs ``(i, j)`` with ``i < j`` and base distance < radius, sorted."""
        adj = sp.triu(self.neighbor_adjacency(radius), k=1, format="csr")
        adj.sort_indices()
        rows = np.repeat(np.arange(adj.shape[0]), np.diff(adj.indptr))
        return np.stack([rows, adj.indices.astype(np.int64)], axis=1)


def snap(m: SampledManifold, coords) -> int:
    """Id of the sample point nearest to ``coords`` (smallest id on ties)."""
    ids, _ = snap_many(m, np.asarray(coords, dtype=np.float64).reshape(1, -1))
    return int(ids[0])


def snap_many(m: SampledManifold, coords: np.ndarray):
    """Vectorized :func:`snap`; returns ``(ids, distances)``."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    d = m.nearest_distance(coords)
    ids = m.smallest_within(coords, d)
    return ids, d


# -- builders ----------------------------------------------------------------------------


def build_torus(points_per_dim: int, dims: int) -> SampledManifold:
    """Uniform grid on the flat torus of circumference 1 per dimension."""
    if dims not in (1, 2, 3):
        raise ValueError(f"dims must be 1, 2 or 3, got {dims}")
    if points_per_dim < 2:
        raise ValueError("points_per_dim must be >= 2")
    if points_per_dim**dims > POINT_BUDGET:
        raise BudgetError(f"{points_per_dim}^{dims} points exceeds budget {POINT_BUDGET}")
    axes = [np.arange(points_per_dim) / points_per_dim] * dims
    grid = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grid], axis=1)
    metric = _torus_metric(coords)
    _validate_metric(metric)
    topo = "circle" if dims == 1 else "torus-n"
    return SampledManifold(coords, topo, {"n": points_per_dim, "dims": dims}, _metric=metric)


def build_circle(points: int) -> SampledManifold:
    return build_torus(points, 1)


def build_interval(points: int, lo: float = 0.0, hi: float = 1.0) -> SampledManifold:
    if points < 2:
        raise ValueError("an interval sample needs at least 2 points")
    if points > POINT_BUDGET:
        raise BudgetError(f"{points} points exceeds budget {POINT_BUDGET}")
    coords = np.linspace(lo, hi, points).reshape(-1, 1)
    metric = np.abs(coords - coords.T)
    _validate_metric(metric)
    return SampledManifold(coords, "interval", {"n": points, "lo": lo, "hi": hi}, _metric=metric)


def icosphere(level: int) -> np.ndarray:
    """Vertices of the icosahedral geodesic mesh at a subdivision level."""
    t = (1.0 + 5**0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    pts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                mid = pts[a] + pts[b]
                pts.append(mid / np.linalg.norm(mid))
                cache[key] = len(pts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(pts)


def build_sphere(subdivision_level: int) -> SampledManifold:
    """Icosahedral mesh of the unit sphere with great-circle distance."""
    if subdivision_level < 0:
        raise ValueError("subdivision_level must be nonnegative")
    if 10 * 4**subdivision_level + 2 > POINT_BUDGET:
        raise BudgetError(f"level {subdivision_level} exceeds the point budget {POINT_BUDGET}")
    coords = icosphere(subdivision_level)
    chord = squareform(pdist(coords))
    metric = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    _validate_metric(metric)
    return SampledManifold(coords, "sphere2", {"level": subdivision_level}, _metric=metric)


def build_shell(subdivision_level: int, radii) -> SampledManifold:
    """Concentric icosahedral spheres in R^3 with the Euclidean metric."""
    radii = [float(r) for r in radii]
    if not radii or min(radii) <= 0:
        raise ValueError("radii must be positive")
    unit = icosphere(subdivision_level)
    if len(unit) * len(radii) > POINT_BUDGET:
        raise BudgetError("shell sample exceeds the point budget")
    coords = np.vstack([r * unit for r in radii])
    metric = squareform(pdist(coords))
    _validate_metric(metric)
    return SampledManifold(coords, "shell", {"level": subdivision_level, "radii": radii}, _metric=metric)


def build_mapping_torus(points_per_dim: int, levels: int, monodromy=CAT_MAP, kappa: float = 1.0) -> SampledManifold:
    """Grid on the mapping torus ``T^2 x [0,1] / (p, 1) ~ (A p, 0)``.

    Chart coordinates are ``(x, y, s)`` with ``s`` the suspension height.
    The base metric is the chordal distance of a continuous injective
    embedding (see :func:`mapping_torus_embedding`), so it is a genuine
    metric on the quotient.
    """
    a = np.asarray(monodromy, dtype=np.int64)
    if a.shape != (2, 2) or round(abs(np.linalg.det(a))) != 1:
        raise ValueError("monodromy must be a unimodular 2x2 integer matrix")
    n, m = points_per_dim, levels
    if n < 2 or m < 2:
        raise ValueError("need at least 2 points per torus direction and 2 levels")
    if n * n * m > POINT_BUDGET:
        raise BudgetError(f"{n}x{n}x{m} exceeds the point budget {POINT_BUDGET}")
    k, i, j = np.meshgrid(np.arange(m), np.arange(n), np.arange(n), indexing="ij")
    coords = np.stack([i.ravel() / n, j.ravel() / n, k.ravel() / m], axis=1)
    emb = mapping_torus_embedding(coords, a, kappa)
    metric = squareform(pdist(emb))
    _validate_metric(metric)
    params = {"n": n, "levels": m, "monodromy": a.tolist(), "kappa": kappa}
    return SampledManifold(coords, "mapping-torus", params, _metric=metric)


def mapping_torus_embedding(coords: np.ndarray, monodromy: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    """Continuous injective map of the mapping torus into R^10.

    The height circle takes two coordinates.  One block carries ``sin(pi s) E(p)``,
    which vanishes at the seam; the other carries ``|cos(pi s)| E(p)`` below
    s = 1/2 and ``|cos(pi s)| E(A p)`` above it, which agrees across the seam.
    """
    coords = np.atleast_2d(coords)
    p = coords[:, :2]
    s = np.mod(coords[:, 2], 1.0)
    ap = np.mod(p @ np.asarray(monodromy, dtype=np.float64).T, 1.0)
    two_pi = 2.0 * np.pi

    def circle_pair(x):
        return np.concatenate([np.cos(two_pi * x), np.sin(two_pi * x)], axis=1) / two_pi

    lower = (s < 0.5)[:, None]
    block_a = np.sin(np.pi * s)[:, None] * circle_pair(p)
    block_b = np.abs(np.cos(np.pi * s))[:, None] * np.where(lower, circle_pair(p), circle_pair(ap))
    height = kappa * np.stack([np.cos(two_pi * s), np.sin(two_pi * s)], axis=1) / two_pi
    return np.hstack([height, block_a, block_b])


def product(m1: SampledManifold, m2: SampledManifold, budget: int = POINT_BUDGET) -> SampledManifold:
    """Cartesian product with the max metric; ids are ``a * |m2| + b``."""
    n1, n2 = len(m1), len(m2)
    if n1 * n2 > budget:
        raise BudgetError(f"product of {n1} x {n2} points exceeds budget {budget}")
    coords = np.hstack([np.repeat(m1.coords, n2, axis=0), np.tile(m2.coords, (n1, 1))])
    return SampledManifold(coords, "product", {"sizes": (n1, n2)}, factors=(m1, m2))


# -- helpers -----------------------------------------------------------------------------


def _wrap_unit(x):
    y = np.mod(x, 1.0)
    y[y >= 1.0] = 0.0
    return y


def _torus_dist(a, b):
    d = np.abs(a - b)
    d = np.minimum(d, 1.0 - d)
    return np.sqrt((d * d).sum(axis=-1))


def _torus_metric(coords):
    n, k = coords.shape
    acc = np.zeros((n, n))
    for c in range(k):
        d = np.abs(coords[:, c, None] - coords[None, :, c])
        d = np.minimum(d, 1.0 - d)
        acc += d * d
    return np.sqrt(acc)


def _sphere_step(x, v, dt):
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    vt = v - (v * u).sum(axis=1, keepdims=True) * u
    speed = np.linalg.norm(vt, axis=1, keepdims=True)
    theta = speed * dt
    direction = np.divide(vt, speed, out=np.zeros_like(vt), where=speed > 0)
    return u * np.cos(theta) + direction * np.sin(theta)


def _shell_step(x, v, dt):
    rad = np.linalg.norm(x, axis=1, keepdims=True)
    u = x / rad
    radial = (v * u).sum(axis=1, keepdims=True)
    vt = v - radial * u
    speed = np.linalg.norm(vt, axis=1, keepdims=True)
    theta = speed * dt / rad
    direction = np.divide(vt, speed, out=np.zeros_like(vt), where=speed > 0)
    return (rad + radial * dt) * (u * np.cos(theta) + direction * np.sin(theta))


def _mapping_torus_step(x, v, dt, a):
    af = a.astype(np.float64)
    ainv = np.round(np.linalg.inv(af))
    p = x[:, :2] + v[:, :2] * dt
    s = x[:, 2] + v[:, 2] * dt
    for _ in range(64):
        up = s >= 1.0
        down = s < 0.0
        if not (up.any() or down.any()):
            break
        p = np.where(up[:, None], p @ af.T, p)
        p = np.where(down[:, None], p @ ainv.T, p)
        s = np.where(up, s - 1.0, np.where(down, s + 1.0, s))
    return np.hstack([_wrap_unit(p), s[:, None]])


def _validate_metric(d: np.ndarray, sample_triples: int = 200_000, seed: int = 0):
    n = d.shape[0]
    if d.shape != (n, n):
        raise MetricError("metric must be square")
    if np.any(np.diag(d) != 0):
        raise MetricError("nonzero diagonal")
    if not np.array_equal(d, d.T):
        raise MetricError("metric is not symmetric")
    off = d + np.diag(np.full(n, np.inf))
    if n > 1 and off.min() <= 0:
        raise MetricError("distinct points at zero distance")
    tol = 1e-12 * max(float(d.max()), 1.0)
    if n <= EXHAUSTIVE_TRIANGLE_LIMIT:
        for k in range(n):
            if np.any(d > d[:, k, None] + d[None, k, :] + tol):
                raise MetricError("triangle inequality violated")
    else:
        rng = np.random.default_rng(seed)
        i, j, k = rng.integers(0, n, size=(3, sample_triples))
        if np.any(d[i, j] > d[i, k] + d[k, j] + tol):
            raise MetricError("triangle inequality violated")
