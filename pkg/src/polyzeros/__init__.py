"""Random polynomials with prescribed Newton polytope: kernels, decay rates and zeros."""

__version__ = "0.1.0"

from .polytope import (Face, LatticePolytope, NonSimplePolytopeError, PolytopeError,
                       contains, count_points, dilate, ehrhart_fit, from_vertices,
                       is_simple, lattice_points, load_polytope, named_polytope,
                       normal_cone_contains)
from .momentmap import (NormalData, Region, SolverError, TorusPoint, b_action_integral,
                        classify_region, decay_function, decay_objective, moment_map,
                        solve_normal_data)
from .szego import SzegoEval, convergence_profile, log_szego_diag, mass_density
from .character import (CharacterEval, character_1d_todd, character_exact,
                        support_function_limit)
from .zerocurrent import (PsiDensity, bk_volume_check, normal_flow_residual, oracle_b,
                          oracle_psi, psi_density, psi_rank)
from .ensemble import (SparsePolynomial, ZeroSample, empirical_zero_stats,
                       sample_polynomial, tentacle_allowed_fraction, univariate_roots)

__all__ = [
    "Face", "LatticePolytope", "NonSimplePolytopeError", "PolytopeError", "contains",
    "count_points", "dilate", "ehrhart_fit", "from_vertices", "is_simple", "lattice_points",
    "load_polytope", "named_polytope", "normal_cone_contains",
    "NormalData", "Region", "SolverError", "TorusPoint", "b_action_integral",
    "classify_region", "decay_function", "decay_objective", "moment_map", "solve_normal_data",
    "SzegoEval", "convergence_profile", "log_szego_diag", "mass_density",
    "CharacterEval", "character_1d_todd", "character_exact", "support_function_limit",
    "PsiDensity", "bk_volume_check", "normal_flow_residual", "oracle_b", "oracle_psi",
    "psi_density", "psi_rank",
    "SparsePolynomial", "ZeroSample", "empirical_zero_stats", "sample_polynomial",
    "tentacle_allowed_fraction", "univariate_roots",
]
