"""Local spline approximation on box meshes.

Tensor-product, hierarchical, and locally refined B-spline generating
systems with coefficient functionals that reproduce polynomials, plus the
error machinery (norms, seminorm right-hand sides, averaged Taylor
expansions) and batch study drivers behind the `study` command.
"""

from .boxmesh import Box, BoxMesh, TruncatedBox, parse_mesh_description, regularity_report, tensor_mesh
from .bspline import TensorBSpline, bspline_derivative, bspline_eval, knot_insert, nesting_relation
from .functionals import apply_functional, build_G, functional_norm_bound, hilbert_inverse, lr_duals
from .multiindex import sobolev_K, total_degree_set
from .polyblossom import blossom, blossom_vector, marsden_coeff
from .spaces import THBLevel, assign_functionals, build_lr, build_thb, build_tps, thb_admissibility
from .approxop import (
    FunctionOracle,
    apply_quasi_interp,
    averaged_taylor,
    error_norm,
    eval_quasi_interp,
    rhs_seminorm,
    sobolev_region_contains,
)
from .studies import catalog, parse_space, run_dim_bound_check, run_h_study, run_mesh_report, run_p_study

__all__ = [
    "Box",
    "BoxMesh",
    "TruncatedBox",
    "parse_mesh_description",
    "regularity_report",
    "tensor_mesh",
    "TensorBSpline",
    "bspline_derivative",
    "bspline_eval",
    "knot_insert",
    "nesting_relation",
    "apply_functional",
    "build_G",
    "functional_norm_bound",
    "hilbert_inverse",
    "lr_duals",
    "sobolev_K",
    "total_degree_set",
    "blossom",
    "blossom_vector",
    "marsden_coeff",
    "THBLevel",
    "assign_functionals",
    "build_lr",
    "build_thb",
    "build_tps",
    "thb_admissibility",
    "FunctionOracle",
    "apply_quasi_interp",
    "averaged_taylor",
    "error_norm",
    "eval_quasi_interp",
    "rhs_seminorm",
    "sobolev_region_contains",
    "catalog",
    "parse_space",
    "run_dim_bound_check",
    "run_h_study",
    "run_mesh_report",
    "run_p_study",
]

__version__ = "0.1.0"
