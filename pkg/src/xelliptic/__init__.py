"""Degenerate X-elliptic Dirichlet problems with rough data.

Discretises X*(A(x) X u) = f on masked uniform grids, solves the resulting
sparse system and measures the solution in L^p and Marcinkiewicz norms.
"""

from .fields import (FieldFamily, HeisenbergParams, custom_family, euclidean_family, heisenberg_family,
                     homogeneous_norm)
from .grid import DiscreteDomain, FrameField, ScalarField, box_domain, build_ball_domain, grad_h, x_grad_h
from .operator import (CoefficientSpec, StiffnessOperator, assemble_stiffness, diagonal_coefficient,
                       identity_coefficient, random_measurable_coefficient, rhs_from_density, rhs_from_dirac,
                       rhs_from_flux)
from .solver import SolveReport, SolverSettings, cg_solve, dense_solve, solve
from .norms import (NormReport, distribution_function, fit_tail_exponent, linf_norm, lp_norm, norm_report,
                    sobolev_exponents, weak_lp_norm)
from .approximation import (TruncationSchedule, duality_check, g_trunc, gauge_power_density,
                            green_function_compare, solve_by_approximation, solve_measure, truncate)

__version__ = "0.1.0"
