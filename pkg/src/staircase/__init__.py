"""Exponential staircase trigonometric sums, their stationary-phase reductions,
resonance search and rank-one flows built from them."""

from .errors import (CapacityError, ConfigError, ConsistencyError, ConvergenceError, DomainError, ParameterError,
                     PrecisionError, ResolutionError, ScheduleError, ShapeError, StaircaseError)
from .flatness import FlatnessReport, flatness_report, hypothesis_check, predicted_bound
from .numerics import (Grid, dist_to_int, dist_to_int_of_product, fresnel_reference, oscillatory_quadrature,
                       trapezoid)
from .rank_one import (DensityEstimate, HatFunction, PiecewiseConstant, PiecewiseLinear, TowerSpec, TowerStage,
                       build_schedule, check_finite_measure, check_theorem_hypotheses, correlation_estimate, lift,
                       lift_indicator, riesz_partial, weak_convergence_diagnostic)
from .resonance import ResonanceHit, ResonanceQuery, expected_gap, search, theorem_window, verify_resonance
from .stationary_phase import (ErrorBudget, PhaseSet, error_budget, first_reduction, omega_reduced, second_reduction,
                               stationary_points)
from .trig_sum import StaircaseParams, SumProfile, eval_direct, eval_profile, omega

__version__ = "0.1.0"
