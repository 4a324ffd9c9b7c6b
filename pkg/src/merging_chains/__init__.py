"""Quantitative merging for time-inhomogeneous Markov chains.

The package builds time-inhomogeneous chains whose invariant measures grow
pointwise with time (conductance schedules do this for free), computes their
exact distribution evolution, estimates the functional-inequality constants
(Poincare, Nash, logarithmic Sobolev), and evaluates merging-time bounds
against the brute-force oracle.
"""

from .core import (Environment, StateSpace, ValidationReport,
                   constant_environment, is_invariant, load_environment,
                   normalize, save_environment, validate_environment)
from .errors import (DomainError, HypothesisViolationError, ResourceLimitError,
                     StructuralError, UnsupportedNormError)
from .networks import (ConductanceSchedule, constant_schedule, cycle_edges,
                       environment_from_schedule, gen_birth_death_hub,
                       gen_hypercube, gen_interpolation, gen_stick,
                       gen_torus, gen_two_state_no_merging, hypercube_edges,
                       kernel_from_conductances, lazify,
                       random_monotone_schedule, schedule_from_edges,
                       torus_edges)
from .evolution import (CenteredOperator, adjoint, centered_forward_dual,
                        centered_operator, density,
                        density_evolution_identity_check, dirac, dual_forward,
                        dual_forward_probability, evolve, forward_dual_product,
                        kernel_product, mass_vector)
from .functional import (dirichlet_form, dirichlet_form_operator, entropy,
                         lp_norm, operator_norm, separation_distance,
                         tv_distance, variance, variance_double_sum)
from .spectral import (ComparisonParams, LogSobReport, NashParams, ProbeReport,
                       SpectralReport, comparison_alpha, comparison_gamma,
                       environment_gammas, fit_nash_C,
                       hypercontractivity_check, logsob_alpha, nash_B,
                       nash_check, nash_transfer, poincare_gamma,
                       second_eigenvalue, symmetrization)
from .bounds import (BoundCurve, ExactCurves, ExperimentReport,
                     LogSobolevSchedule, MergingQuery, bound_T1, bound_T3,
                     bound_T4_sep, bound_T4_tv, bound_T5, bound_T6,
                     bound_vs_exact_sweep, curve_T1, curve_T3, curve_T4_sep,
                     curve_T4_tv, curve_T5, curve_T6, exact_curves,
                     exact_merging_time, logsob_schedule, merging_time_T3,
                     merging_time_T4_sep, merging_time_T4_tv, merging_time_T5,
                     merging_time_T6, t6_radius)

__version__ = "0.1.0"
