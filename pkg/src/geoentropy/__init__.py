"""Entropy of geometric structures from pursuit-evasion metrics.

Sample a compact manifold, attach a structure (vector field, Riemannian
frame, distribution, Poisson bivector, direct sums), build the discrete
A-path move graph, evaluate the pursuit metrics d_r / D_r and read off the
exponential growth rate of separated sets.
"""

from .entropy import (
    EntropyEstimate,
    bowen_dinaburg,
    entropy_from_counts,
    estimate_entropy,
    exact_separated_size,
    greedy_separated,
    lemma_constant,
    local_entropy,
    max_separated,
)
from .manifold import (
    SampledManifold,
    build_circle,
    build_interval,
    build_mapping_torus,
    build_shell,
    build_sphere,
    build_torus,
    product,
    snap,
)
from .paths import BudgetExceeded, MoveGraph, build_move_graph, enumerate_evader_paths, leaf_partition
from .pursuit import D_r_matrix, PursuitMatrix, d_r_matrix, delta_r, local_d_r_matrix, pursuit_value, sparse_pursuit
from .structure import (
    GeometricStructure,
    direct_sum,
    from_distribution,
    from_poisson,
    from_riemannian,
    from_vector_field,
    scale_norm,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "D_r_matrix",
    "EntropyEstimate",
    "GeometricStructure",
    "MoveGraph",
    "PursuitMatrix",
    "SampledManifold",
    "bowen_dinaburg",
    "build_circle",
    "build_interval",
    "build_mapping_torus",
    "build_move_graph",
    "build_shell",
    "build_sphere",
    "build_torus",
    "d_r_matrix",
    "delta_r",
    "direct_sum",
    "entropy_from_counts",
    "enumerate_evader_paths",
    "estimate_entropy",
    "exact_separated_size",
    "from_distribution",
    "from_poisson",
    "from_riemannian",
    "from_vector_field",
    "greedy_separated",
    "leaf_partition",
    "lemma_constant",
    "local_d_r_matrix",
    "local_entropy",
    "max_separated",
    "product",
    "pursuit_value",
    "scale_norm",
    "snap",
    "sparse_pursuit",
]
