"""Built-in structures with their expected entropy class."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .manifold import (
    CAT_MAP,
    SampledManifold,
    build_circle,
    build_mapping_torus,
    build_shell,
    build_torus,
    product,
)
from .structure import (
    GeometricStructure,
    StructureError,
    from_distribution,
    from_poisson,
    from_riemannian,
    from_vector_field,
)

GOLDEN_SLOPE = (5**0.5 - 1) / 2
CAT_ENTROPY = float(np.log((3 + 5**0.5) / 2))


@dataclass(frozen=True)
class ZooEntry:
    name: str
    expected: str
    description: str
    builder: Callable


ZOO: dict = {}


def _register(name, expected, description):
    def deco(fn):
        ZOO[name] = ZooEntry(name, expected, description, fn)
        return fn

    return deco


def build(name: str, manifold: SampledManifold | None = None, **params) -> GeometricStructure:
    """Instantiate a zoo structure; ``manifold`` overrides the default sample."""
    if name not in ZOO:
        raise KeyError(f"unknown zoo structure {name!r}; known: {', '.join(sorted(ZOO))}")
    g = ZOO[name].builder(manifold, **params)
    g.meta.update({"zoo": name, "expected": ZOO[name].expected})
    return g


def listing() -> list:
    return [(e.name, e.expected, e.description) for e in ZOO.values()]


def vector_field_of(name: str, manifold: SampledManifold | None = None, **params) -> tuple:
    """``(manifold, field array)`` of a vector-field zoo entry (used by the flow oracle)."""
    g = build(name, manifold, **params)
    if g.descriptor != "vector-field":
        raise StructureError(f"{name} is not a vector field")
    return g.manifold, np.array(g.gen_velocity[g.gen_ptr[:-1]])


@_register("zero-field", "expected-zero", "X = 0 on any manifold (default circle(8))")
def _zero(manifold=None):
    m = manifold if manifold is not None else build_circle(8)
    return from_vector_field(m, np.zeros((len(m), m.chart_dim)))


@_register("rotation-circle", "expected-zero", "unit-speed rotation d/dtheta on circle(n)")
def _rotation(manifold=None, n: int = 8, speed: float = 1.0):
    m = manifold if manifold is not None else build_circle(n)
    if m.topology != "circle":
        raise StructureError("rotation-circle needs a circle sample")
    return from_vector_field(m, np.full((len(m), 1), float(speed)))


@_register("linear-torus-flow", "expected-zero", "constant field (1, golden slope) on the 2-torus")
def _linear(manifold=None, n: int = 16, slope: float = GOLDEN_SLOPE):
    m = manifold if manifold is not None else build_torus(n, 2)
    if m.topology != "torus-n" or m.chart_dim != 2:
        raise StructureError("linear-torus-flow needs a 2-torus sample")
    return from_vector_field(m, np.tile([1.0, float(slope)], (len(m), 1)))


@_register("catmap-suspension", "expected-positive (2 ln golden^2 = 1.925)",
           "unit-speed suspension flow of the cat map [[2,1],[1,1]] on its mapping torus")
def _catmap(manifold=None, n: int = 48, levels: int = 4):
    m = manifold if manifold is not None else build_mapping_torus(n, levels, CAT_MAP)
    if m.topology != "mapping-torus":
        raise StructureError("catmap-suspension needs a mapping-torus sample")
    return from_vector_field(m, np.tile([0.0, 0.0, 1.0], (len(m), 1)))


@_register("riemannian-torus", "expected-zero", "flat metric on the n-torus (identity anchor)")
def _riemannian(manifold=None, n: int = 8, dims: int = 1):
    m = manifold if manifold is not None else build_torus(n, dims)
    return from_riemannian(m)


def contact_frame(m: SampledManifold) -> list:
    """Smooth bracket-generating frame {d/dz, -sin(2 pi z) d/dx + cos(2 pi z) d/dy} on the 3-torus."""
    z = m.coords[:, 2]
    e3 = np.tile([0.0, 0.0, 1.0], (len(m), 1))
    v = np.stack([-np.sin(2 * np.pi * z), np.cos(2 * np.pi * z), np.zeros(len(m))], axis=1)
    return [e3, v]


@_register("contact-torus3", "expected-zero", "contact distribution on the 3-torus (bracket generating)")
def _contact(manifold=None, n: int = 6):
    m = manifold if manifold is not None else build_torus(n, 3)
    if m.topology != "torus-n" or m.chart_dim != 3:
        raise StructureError("contact-torus3 needs a 3-torus sample")
    return from_distribution(m, contact_frame(m))


@_register("reeb-like-distribution", "expected-zero", "line field spanned by (1, sin 2 pi y) on the 2-torus")
def _reeb(manifold=None, n: int = 12):
    m = manifold if manifold is not None else build_torus(n, 2)
    y = m.coords[:, 1]
    return from_distribution(m, [np.stack([np.ones(len(m)), np.sin(2 * np.pi * y)], axis=1)])


def pi_x_structure(inner: GeometricStructure, circle_points: int = 4) -> GeometricStructure:
    """Poisson structure X ^ d/dq on N x S^1 for the vector field X of ``inner``.

    Covectors ``(xi, c dq)`` run over ``xi in {0, +-dx_i}`` and ``c in {0, +-1}``
    with the max norm; the anchor sends them to ``(-c X, xi(X))``.
    """
    if inner.descriptor != "vector-field":
        raise StructureError("poisson-pi-x needs a vector-field structure")
    n_man = inner.manifold
    circle = build_circle(circle_points)
    m = product(n_man, circle)
    X = np.array(inner.gen_velocity[inner.gen_ptr[:-1]])
    d = n_man.chart_dim
    big = np.zeros((len(n_man), d + 1, d + 1))
    big[:, :d, d] = X
    big[:, d, :d] = -X
    bivector = np.repeat(big, len(circle), axis=0)
    covecs = [np.eye(d + 1)[i] for i in range(d + 1)]
    frame = list(covecs)
    norms = [1.0] * (d + 1)
    for i in range(d):
        for s in (1.0, -1.0):
            frame.append(covecs[i] + s * covecs[d])
            norms.append(1.0)
    frame = np.broadcast_to(np.array(frame), (len(m), len(frame), d + 1))
    norms = np.broadcast_to(np.array(norms), (len(m), len(norms)))
    g = from_poisson(m, bivector, frame, norms)
    g.meta["inner"] = inner.meta.get("zoo", inner.descriptor)
    return g


@_register("poisson-pi-x", "expected 2 h_top(X) of the inner field",
           "Poisson bivector X ^ d/dq on N x circle (parameter: inner vector field)")
def _pi_x(manifold=None, inner: str = "linear-torus-flow", circle_points: int = 4, inner_params: dict | None = None):
    if manifold is not None:
        raise StructureError("poisson-pi-x builds its own product manifold; pass inner_params instead")
    g_inner = build(inner, None, **(inner_params or {}))
    return pi_x_structure(g_inner, circle_points)


def sphere_bivector(coords: np.ndarray) -> np.ndarray:
    """``|x|^2 (x1 d2^d3 + x2 d3^d1 + x3 d1^d2)`` as antisymmetric matrices."""
    r2 = (coords**2).sum(axis=1)
    x1, x2, x3 = coords.T
    pi = np.zeros((len(coords), 3, 3))
    pi[:, 1, 2], pi[:, 2, 1] = x1, -x1
    pi[:, 2, 0], pi[:, 0, 2] = x2, -x2
    pi[:, 0, 1], pi[:, 1, 0] = x3, -x3
    return r2[:, None, None] * pi


@_register("poisson-sphere-shell", "expected-zero", "sphere-foliation bivector on concentric icosahedral shells")
def _sphere_shell(manifold=None, level: int = 1, radii=(0.8, 1.2)):
    m = manifold if manifold is not None else build_shell(level, radii)
    if m.topology not in ("shell", "sphere2"):
        raise StructureError("poisson-sphere-shell needs a shell or sphere sample")
    return from_poisson(m, sphere_bivector(m.coords))
