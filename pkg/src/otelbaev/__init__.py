"""Otelbaev averages and kernel estimates for the equation -y' + q y = f."""

from .averages import (DValue, InsufficientMassError, SolvabilityReport, d0_estimate, d_of_x,
                       d_values, q0_estimate, q_star, solvability_report, steklov_average)
from .coefficient import (CoefficientFunction, CumulativeIntegral, Decomposition, DomainError,
                          EvaluationError, SmoothPart, UnimodalPair, catalog_example1,
                          catalog_example2, constant, from_label, integrate_q, square)
from .covering import Covering, build_covering, build_d_covering, verify_covering
from .equivalence import (EquivalenceReport, F1_of_x, F_of_x, UnimodalEstimate, make_grid,
                          uv_to_q, verify_example1, verify_example2, verify_thm33, verify_thm35,
                          weak_equiv_constant)
from .kclass import KGammaReport, estimate_ab, gamma_of_ab, kappa1, kappa2, membership_report
from .kernel import (DataFunction, KernelProfile, SpaceParams, I_of_x, J_of_x, M_of_x, S_of_x,
                     admissibility_estimate, admissibility_family, bump, gaussian, green_apply,
                     homogeneous_divergence_check, homogeneous_z, indicator, kernel_profile,
                     lp_theta_norm, pointwise_bound_check, residual_check, space, triangle)
from .quadrature import (ConvergenceError, DivergenceSuspectError, QuadratureConfig,
                         QuadratureError, improper_exp_integral, integrate_adaptive)

__version__ = "0.1.0"
