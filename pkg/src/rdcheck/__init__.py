"""Reaction-diffusion global-existence diagnostics.

A 1-D finite-volume laboratory for mass-controlled reaction-diffusion
systems: an IMEX solver with positivity enforcement, sampled structure
audits of reaction families, auxiliary-field comparison diagnostics, the
closed-form constants of the underlying regularity theory, and the
conservative closure transform, all reachable from a JSON-configured CLI.
"""

from .config import RunConfig, build_initial_state, load_config, validate_config
from .diagnostics import (
    AuxiliaryConfig,
    AuxiliaryState,
    AuxiliaryTracker,
    CheckResult,
    DiagnosticsReport,
    RunMeasurement,
    check_b_range,
    check_conservation_laws,
    check_entropy,
    check_mass_envelope,
    check_mass_identity,
    check_positivity,
    check_uhat_bounds,
    check_z_bound,
    entropy_pointwise_worst,
    interpolation_scaling_check,
    loglog_slope,
)
from .errors import ConfigError, NumericalFailure
from .experiment import ExperimentOutcome, config_sha256, run_experiment, write_atomic
from .grid import (
    Field,
    Grid1D,
    apply_laplacian,
    grad_sup,
    holder_modulus,
    integrate,
    laplacian_values,
)
from .models import (
    NEGATIVE_CLAMP_FLOOR,
    CheckOutcome,
    PolynomialSpec,
    QuadraticReversibleSpec,
    ReactionSystem,
    SkewLVSpec,
    StructureVerdict,
    check_structure,
    entropy_dissipation,
    eval_reaction,
    instantiate_model,
)
from .solver import (
    SolverConfig,
    StepEvent,
    SystemState,
    Trajectory,
    TrajectoryEntry,
    imex_step,
    implicit_heat_step,
    run_simulation,
    solve_tridiagonal,
)
from .theory import (
    ExponentAlgebra,
    FitResult,
    InterpolationConstants,
    QuadEquilibrium,
    exponent_algebra,
    fit_rate,
    free_space_constants,
    gamma_fn,
    gaussian_moment,
    interpolation_constants,
    optimal_k,
    quad_equilibrium,
)
from .transform import AugmentedSystem, augment_system, rescale_solution, verify_augmented

__version__ = "0.1.0"

__all__ = [
    "AugmentedSystem",
    "AuxiliaryConfig",
    "AuxiliaryState",
    "AuxiliaryTracker",
    "CheckOutcome",
    "CheckResult",
    "ConfigError",
    "DiagnosticsReport",
    "ExperimentOutcome",
    "ExponentAlgebra",
    "Field",
    "FitResult",
    "Grid1D",
    "InterpolationConstants",
    "NEGATIVE_CLAMP_FLOOR",
    "NumericalFailure",
    "PolynomialSpec",
    "QuadEquilibrium",
    "QuadraticReversibleSpec",
    "ReactionSystem",
    "RunConfig",
    "RunMeasurement",
    "SkewLVSpec",
    "SolverConfig",
    "StepEvent",
    "StructureVerdict",
    "SystemState",
    "Trajectory",
    "TrajectoryEntry",
    "apply_laplacian",
    "augment_system",
    "build_initial_state",
    "check_b_range",
    "check_conservation_laws",
    "check_entropy",
    "check_mass_envelope",
    "check_mass_identity",
    "check_positivity",
    "check_structure",
    "check_uhat_bounds",
    "check_z_bound",
    "config_sha256",
    "entropy_dissipation",
    "entropy_pointwise_worst",
    "eval_reaction",
    "exponent_algebra",
    "fit_rate",
    "free_space_constants",
    "gamma_fn",
    "gaussian_moment",
    "grad_sup",
    "holder_modulus",
    "imex_step",
    "implicit_heat_step",
    "instantiate_model",
    "integrate",
    "interpolation_constants",
    "interpolation_scaling_check",
    "laplacian_values",
    "load_config",
    "loglog_slope",
    "optimal_k",
    "quad_equilibrium",
    "rescale_solution",
    "run_experiment",
    "run_simulation",
    "solve_tridiagonal",
    "validate_config",
    "verify_augmented",
    "write_atomic",
]
