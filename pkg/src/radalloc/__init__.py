"""radalloc: minimax CRLB resource allocation for distributed MIMO radar.

Builds per-target CRLB trace bounds from scene geometry, optimizes
transmit power / bandwidth / joint allocations through a sequential
convex approximation of the shared canonical problem, certifies results
with global single-constraint lower bounds, and checks predictions with
a weighted least squares TOA localizer plus a seeded Monte Carlo harness.
"""

from .bounds import (
    Certificate, SingleConstraintSolution, certificate_from_relaxations,
    lower_bound, solve_all_relaxations, solve_single_constraint_global,
)
from .crlb import (
    AllocationPair, CrlbComponents, all_components, build_components, eta,
    max_trace_crlb, max_unified_cost, trace_crlb, unified_cost,
)
from .errors import (
    DegenerateSolution, Infeasible, InfeasibleRelaxation, InfeasibleStart,
    InvalidPoint, NotSymmetric, NumericalStall, RadallocError, RankDeficient,
    SingularGeometry, ZeroDistance,
)
from .harness import (
    ALL_POLICIES, CSV_HEADER, ExperimentConfig, ExperimentRun, TrialRecord,
    active_histogram, emit_plot_script, reference_power, run_experiment,
    summarize, trial_seed, write_csv,
)
from .localization import (
    ToaObservation, blue_estimate, localize_all, max_position_error,
    pulse_count, simulate_toas, toa_noise_sigma,
)
from .scenario import (
    SPEED_OF_LIGHT, Budgets, LayoutDistribution, PhysConst, Point2D, Scenario,
    distances, pathloss, random_scenario,
)
from .spca import (
    PROBLEM_EXPONENT, AllocationResult, CanonicalProblem, CanonicalSolution,
    SpcaOptions, active_transmitters, allocate, canonical_problem,
    evaluate_uniform, recover_allocation, solve_canonical, uniform_pair,
)
from .subproblem import (
    ConvexSubproblem, EigenSplit, LinkConstraint, QclpResult, QuadConstraint,
    build_subproblem, phase1_feasible, solve_qclp, split_psd_nsd,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT", "PROBLEM_EXPONENT",
    "Point2D", "PhysConst", "Budgets", "Scenario", "LayoutDistribution",
    "distances", "pathloss", "random_scenario",
    "CrlbComponents", "AllocationPair", "eta", "build_components",
    "all_components", "trace_crlb", "unified_cost", "max_trace_crlb",
    "max_unified_cost",
    "EigenSplit", "ConvexSubproblem", "LinkConstraint", "QuadConstraint",
    "QclpResult", "split_psd_nsd",
    "build_subproblem", "solve_qclp", "phase1_feasible",
    "SpcaOptions", "CanonicalProblem", "CanonicalSolution",
    "AllocationResult", "canonical_problem", "solve_canonical",
    "recover_allocation", "allocate", "evaluate_uniform", "uniform_pair",
    "active_transmitters",
    "SingleConstraintSolution", "Certificate",
    "solve_single_constraint_global", "solve_all_relaxations",
    "certificate_from_relaxations", "lower_bound",
    "ToaObservation", "pulse_count", "toa_noise_sigma", "simulate_toas",
    "blue_estimate", "max_position_error", "localize_all",
    "ALL_POLICIES", "CSV_HEADER", "ExperimentConfig", "TrialRecord",
    "ExperimentRun", "reference_power", "trial_seed", "run_experiment",
    "summarize", "active_histogram", "write_csv", "emit_plot_script",
    "RadallocError", "ZeroDistance", "SingularGeometry", "NotSymmetric",
    "InvalidPoint", "Infeasible", "NumericalStall", "InfeasibleStart",
    "DegenerateSolution", "InfeasibleRelaxation", "RankDeficient",
]
