"""Finite elements for transmission problems with sign-changing coefficients.

The weak form is made coercive by testing with reflected test functions
near the interface; dispersive eigenvalue problems are solved with a
contour-integral method.
"""
from .assembly import (Coefficient, apply_dirichlet, assemble_load, assemble_mass,
                       assemble_reflected_load, assemble_reflection, assemble_stiffness,
                       build_T_system)
from .cutoff import CutoffProfile
from .errors import (AtPole, BadParameters, ContourThroughEigenvalue, ContrastTooSmall,
                     DimensionMismatch, InvalidDelta, IoError, LocateFailure, NumericalError,
                     OutOfTube, ParseError, RankAmbiguity, SingularMatrix, TCoerciveError,
                     ValidationError)
from .evp import (ContourConfig, HoloPencil, LorentzLaw, beyn_solve, build_pencil,
                  disc_reference_eigenvalues, law_eval, pencil_eval)
from .fespace import FeSpace, SubdividedRule, rule_points, shape_eval
from .geometry import (Arc2D, Segment2D, TubularNeighborhood, curvature, foot_and_distance,
                       max_delta_for_contrast, norm_bound, reflect_jacobian, reflect_point)
from .mesh import Mesh, element_map, element_map_eval, gen_disc_in_disc, gen_rounded_triangle_in_square, locate
from .problems import DiscProblem, RoundedTriangleProblem
from .solver import StudyReport, error_norms, run_convergence_study, solve_linear

__version__ = "0.1.0"
