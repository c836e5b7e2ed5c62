"""Discrete geometric structures (M, A, norm, anchor).

A fiber of A is represented by a finite symmetric sample of its unit sphere
plus the zero element.  Each sample ``a`` is stored as the pair
``(anchor(a), |a|)``: its velocity in chart coordinates and its fiber norm.
Generators of all points live in one ragged array indexed by ``gen_ptr``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .manifold import SampledManifold, product

DESCRIPTORS = ("vector-field", "riemannian", "distribution", "poisson", "direct-sum", "scaled")


class StructureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GeometricStructure:
    manifold: SampledManifold
    gen_ptr: np.ndarray
    gen_velocity: np.ndarray
    gen_norm: np.ndarray
    norm_scale: float = 1.0
    descriptor: str = "vector-field"
    components: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.norm_scale > 0:
            raise StructureError("norm_scale must be positive")
        n = len(self.manifold)
        if len(self.gen_ptr) != n + 1 or np.any(np.diff(self.gen_ptr) < 1):
            raise StructureError("every point needs a nonempty generator list")
        for arr in (self.gen_ptr, self.gen_velocity, self.gen_norm):
            arr.setflags(write=False)

    @property
    def n_points(self):
        return len(self.manifold)

    def generators(self, i: int):
        """List of ``(velocity, fiber_norm)`` at point ``i`` (norms unscaled)."""
        lo, hi = self.gen_ptr[i], self.gen_ptr[i + 1]
        return [(self.gen_velocity[k], float(self.gen_norm[k])) for k in range(lo, hi)]

    def admissible(self, i: int, r: float) -> np.ndarray:
        """Indices (into the ragged arrays) of generators with scaled norm <= r."""
        lo, hi = self.gen_ptr[i], self.gen_ptr[i + 1]
        idx = np.arange(lo, hi)
        return idx[self.gen_norm[lo:hi] <= r / self.norm_scale]

    @cached_property
    def is_symmetric(self) -> bool:
        for i in range(self.n_points):
            lo, hi = self.gen_ptr[i], self.gen_ptr[i + 1]
            v, nrm = self.gen_velocity[lo:hi], self.gen_norm[lo:hi]
            for k in range(hi - lo):
                hit = np.all(v == -v[k], axis=1) & (nrm == nrm[k])
                if not hit.any():
                    return False
        return True

    def anchor_rank(self) -> np.ndarray:
        """Rank of the anchor image at every point."""
        ranks = np.empty(self.n_points, dtype=np.int64)
        for i in range(self.n_points):
            v = self.gen_velocity[self.gen_ptr[i] : self.gen_ptr[i + 1]]
            ranks[i] = np.linalg.matrix_rank(v, tol=1e-10) if np.any(v) else 0
        return ranks

    @property
    def is_surjective(self) -> bool:
        return bool(np.all(self.anchor_rank() == manifold_dim(self.manifold)))


def manifold_dim(m: SampledManifold) -> int:
    topo = m.topology
    if topo == "product":
        return sum(manifold_dim(f) for f in m.factors)
    return {"circle": 1, "interval": 1, "sphere2": 2, "shell": 3, "mapping-torus": 3}.get(topo, m.chart_dim)


def _from_lists(m, per_point, descriptor, meta=None) -> GeometricStructure:
    counts = np.array([len(g) for g in per_point], dtype=np.int64)
    ptr = np.zeros(len(per_point) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    vel = np.array([v for g in per_point for v, _ in g], dtype=np.float64).reshape(-1, m.chart_dim)
    nrm = np.array([n for g in per_point for _, n in g], dtype=np.float64)
    return GeometricStructure(m, ptr, vel, nrm, 1.0, descriptor, meta=dict(meta or {}))


def _field_array(m: SampledManifold, fld) -> np.ndarray:
    if callable(fld):
        arr = np.array([fld(i) for i in range(len(m))], dtype=np.float64)
    else:
        arr = np.asarray(fld, dtype=np.float64)
    if arr.ndim == 1 and m.chart_dim == 1:
        arr = arr[:, None]
    if arr.shape != (len(m), m.chart_dim):
        raise StructureError(f"field must give a {m.chart_dim}-vector at each of {len(m)} points, got shape {arr.shape}")
    return arr


def from_vector_field(m: SampledManifold, fld) -> GeometricStructure:
    """Structure of a vector field: the unit section of a line bundle maps to X."""
    x = _field_array(m, fld)
    zero = np.zeros(m.chart_dim)
    per_point = [[(x[i], 1.0), (-x[i], 1.0), (zero, 0.0)] for i in range(len(m))]
    return _from_lists(m, per_point, "vector-field")


def from_riemannian(m: SampledManifold, frame=None) -> GeometricStructure:
    """Identity anchor on the tangent bundle.

    The unit sphere is sampled by ``+-f_i`` and ``+-f_i +- f_j`` for the frame
    vectors ``f_i``; each sample carries its Euclidean length as fiber norm.
    ``frame`` has shape ``(n, k, chart_dim)``; default is the chart basis.
    """
    n, d = len(m), m.chart_dim
    if frame is None:
        frame = np.broadcast_to(np.eye(d), (n, d, d))
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[0] != n or frame.shape[2] != d:
        raise StructureError("frame must have shape (points, k, chart_dim)")
    zero = np.zeros(d)
    per_point = []
    for i in range(n):
        f = frame[i]
        if np.linalg.matrix_rank(f, tol=1e-10) < manifold_dim(m):
            raise StructureError(f"degenerate frame at point {i}")
        gens = [(zero, 0.0)]
        k = len(f)
        for a in range(k):
            gens += [(f[a], float(np.linalg.norm(f[a]))), (-f[a], float(np.linalg.norm(f[a])))]
        for a in range(k):
            for b in range(a + 1, k):
                for sgn in (1.0, -1.0):
                    v = f[a] + sgn * f[b]
                    nv = float(np.linalg.norm(v))
                    gens += [(v, nv), (-v, nv)]
        per_point.append(gens)
    return _from_lists(m, per_point, "riemannian")


def from_distribution(m: SampledManifold, frame_fields) -> GeometricStructure:
    """Inclusion anchor of a (possibly singular) distribution spanned by frame fields."""
    fields = [_field_array(m, f) for f in frame_fields]
    zero = np.zeros(m.chart_dim)
    per_point = []
    for i in range(len(m)):
        gens = [(zero, 0.0)]
        for f in fields:
            nv = float(np.linalg.norm(f[i]))
            if nv > 0:
                gens += [(f[i], nv), (-f[i], nv)]
        per_point.append(gens)
    return _from_lists(m, per_point, "distribution")


def from_poisson(m: SampledManifold, bivector, cotangent_frame=None, norms=None, atol: float = 1e-12) -> GeometricStructure:
    """Contraction anchor ``xi -> Pi(xi, .)`` of a Poisson bivector.

    ``bivector`` has shape ``(n, d, d)``.  ``cotangent_frame`` has shape
    ``(n, k, d)`` (default: chart covector basis) with matching ``norms``
    ``(n, k)`` (default: Euclidean length of each covector).
    """
    n, d = len(m), m.chart_dim
    pi = np.asarray(bivector, dtype=np.float64)
    if pi.shape != (n, d, d):
        raise StructureError(f"bivector must have shape {(n, d, d)}")
    if np.max(np.abs(pi + np.swapaxes(pi, 1, 2)), initial=0.0) > atol:
        raise StructureError("bivector is not antisymmetric")
    if cotangent_frame is None:
        cotangent_frame = np.broadcast_to(np.eye(d), (n, d, d))
    xi = np.asarray(cotangent_frame, dtype=np.float64)
    if norms is None:
        norms = np.linalg.norm(xi, axis=2)
    norms = np.asarray(norms, dtype=np.float64)
    zero = np.zeros(d)
    per_point = []
    for i in range(n):
        gens = [(zero, 0.0)]
        for a in range(xi.shape[1]):
            if norms[i, a] <= 0:
                continue
            v = xi[i, a] @ pi[i]
            gens += [(v, float(norms[i, a])), (-v, float(norms[i, a]))]
        per_point.append(gens)
    return _from_lists(m, per_point, "poisson")


def scale_norm(g: GeometricStructure, gamma: float) -> GeometricStructure:
    """Multiply every fiber norm by ``gamma``; generators are shared."""
    if not gamma > 0:
        raise StructureError("gamma must be positive")
    meta = dict(g.meta)
    meta["scaled_from"] = g.descriptor
    return GeometricStructure(
        g.manifold, g.gen_ptr, g.gen_velocity, g.gen_norm, g.norm_scale * gamma, "scaled", g.components, meta
    )


def direct_sum(g1: GeometricStructure, g2: GeometricStructure, budget: int | None = None) -> GeometricStructure:
    """Sum structure on the product manifold with the max fiber norm.

    Generators at ``(x, y)`` are all pairs of component generators with norm
    ``max(n1, n2)`` (component norm scales applied).  The components are kept
    so move graphs can be formed as products of component move graphs.
    """
    kwargs = {} if budget is None else {"budget": budget}
    m = product(g1.manifold, g2.manifold, **kwargs)
    n2 = g2.n_points
    c1 = np.diff(g1.gen_ptr)
    c2 = np.diff(g2.gen_ptr)
    counts = np.repeat(c1, n2) * np.tile(c2, g1.n_points)
    ptr = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    vel = np.empty((ptr[-1], m.chart_dim))
    nrm = np.empty(ptr[-1])
    d1 = g1.manifold.chart_dim
    pos = 0
    for a in range(g1.n_points):
        v1 = g1.gen_velocity[g1.gen_ptr[a] : g1.gen_ptr[a + 1]]
        n1 = g1.gen_norm[g1.gen_ptr[a] : g1.gen_ptr[a + 1]] * g1.norm_scale
        for b in range(n2):
            v2 = g2.gen_velocity[g2.gen_ptr[b] : g2.gen_ptr[b + 1]]
            nb = g2.gen_norm[g2.gen_ptr[b] : g2.gen_ptr[b + 1]] * g2.norm_scale
            k = len(v1) * len(v2)
            vel[pos : pos + k, :d1] = np.repeat(v1, len(v2), axis=0)
            vel[pos : pos + k, d1:] = np.tile(v2, (len(v1), 1))
            nrm[pos : pos + k] = np.maximum(np.repeat(n1, len(v2)), np.tile(nb, len(v1)))
            pos += k
    return GeometricStructure(m, ptr, vel, nrm, 1.0, "direct-sum", (g1, g2))
