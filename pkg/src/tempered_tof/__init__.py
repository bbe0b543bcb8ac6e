"""Tempered time-fractional advection-diffusion on graded meshes.

Solver, manufactured-solution verification and time-of-flight current
post-processing / calibration.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    DegenerateWindowError,
    InvalidParameterError,
    NonPositiveSampleError,
    NumericalBreakdownError,
    StabilityError,
    TemperedToFError,
)
from .mesh import GradedMesh, L1CoefficientTable, SpatialMesh, build_graded_mesh, build_l1_table, build_spatial_mesh
from .fractional import TemperedParams, gamma_eval, l1_caputo, temper
from .solver import ProblemSpec, SolutionField, StepSystem, check_stability, march, thomas_solve
from .observables import CurrentTrace, PowerLawFit, charge_moment, fit_power_laws, transient_current
from .verification import (
    ErrorRecord,
    manufactured_forcing,
    manufactured_solution,
    optimal_grading,
    run_convergence_table,
)
from .calibration import FitProblem, FitResult, MeasuredTrace, fit, gaussian_packet, loss

__all__ = [
    "__version__",
    "ConfigError",
    "ConfigParseError",
    "ConfigValidationError",
    "DegenerateWindowError",
    "InvalidParameterError",
    "NonPositiveSampleError",
    "NumericalBreakdownError",
    "StabilityError",
    "TemperedToFError",
    "GradedMesh",
    "L1CoefficientTable",
    "SpatialMesh",
    "build_graded_mesh",
    "build_l1_table",
    "build_spatial_mesh",
    "TemperedParams",
    "gamma_eval",
    "l1_caputo",
    "temper",
    "ProblemSpec",
    "SolutionField",
    "StepSystem",
    "check_stability",
    "march",
    "thomas_solve",
    "CurrentTrace",
    "PowerLawFit",
    "charge_moment",
    "fit_power_laws",
    "transient_current",
    "ErrorRecord",
    "manufactured_forcing",
    "manufactured_solution",
    "optimal_grading",
    "run_convergence_table",
    "FitProblem",
    "FitResult",
    "MeasuredTrace",
    "fit",
    "gaussian_packet",
    "loss",
]
