"""Depth-first exploration of configuration-model random graphs and its fluid limit."""

from .components import HalfEdgeClasses, classify_half_edges
from .degrees import (
    AssumptionReport,
    DegreeDistribution,
    DegreeSequence,
    empirical_distribution,
    sample_degree_sequence,
    tv_distance,
    validate_assumptions,
)
from .errors import (
    CmdfsError,
    DomainError,
    NoRootError,
    StepSizeError,
    SubcriticalError,
    SubcriticalStateError,
)
from .exploration import (
    ContourTrace,
    Exploration,
    InducedHistogram,
    explore_and_build,
    ladder_times,
    longest_path_lower_bound,
)
from .fluid import (
    FluidState,
    TruncationSpec,
    closed_form_coeffs,
    drift_Ni,
    drift_T,
    solve_system,
    solve_system_prime,
    time_change,
    verify_truncated_identity,
)
from .genfun import (
    GenFun,
    ProfileCurve,
    alpha_c,
    alpha_of_rho,
    g_alpha,
    g_hat_alpha,
    heavy_tail_factorial_moment,
    limit_profile,
    solve_rho,
    xi,
)
from .harness import ComparisonReport, ExperimentConfig, degree_snapshot_check, run_experiment

__version__ = "0.1.0"
