"""Size-structured polymer growth and fragmentation dynamics.

A monomer pool feeds polymers that elongate, fragment into two pieces,
and degrade; fragments below the minimal size dissolve back into the
pool.  The package provides the frozen-monomer-level principal
eigenvalue machinery, steady-state and shape analysis, a time-domain
integrator with exact mass books, an independent integer-chain
cross-check, and a config-driven command line.
"""

from .coefficients import (Affine, Bell, CoefficientSet, CoefficientShape,
                           Constant, ScaledBell, eval_coefficients)
from .config import ConfigError, RunConfig, default_xmax, parse_config
from .discrete import (DiscreteParams, DiscreteState, DiscreteTrajectory,
                       calibration_mismatches, compare_continuum,
                       default_calibration, integrate_discrete,
                       matched_continuum_setup)
from .dynamics import (GrowthFit, IncubationResult, IntegratorFailure,
                       StabilityResult, Trajectory, growth_rate,
                       incubation_time, integrate, seed_state,
                       stability_experiment, sweep)
from .eigen import (EigenConvergenceError, EigenSolution, HypothesisConstants,
                    PositivityViolationError, ScanResult, adjoint_eigenpair,
                    eigenvalue_from_moments, hypothesis_constants,
                    principal_eigenpair, scan_lambda)
from .grid import PolymerState, SizeGrid, moments
from .kernel import below_cutoff_mass_share, kernel_weights
from .operator import (AdjointOperator, BalanceResult, FragOperator, assemble,
                       assemble_adjoint, macroscopic_balance,
                       transport_reaction_parts)
from .records import (PACKAGE_VERSION, ExperimentRecord, canonical_json,
                      config_echo, grid_hash, write_csv)
from .steady import (BimodalityReport, SteadyState, StationaryCheck,
                     VInfResult, bimodality_report, build_steady_state,
                     detect_modes, find_v_inf, stationary_profile_check)

__version__ = PACKAGE_VERSION

__all__ = [
    "Affine", "Bell", "CoefficientSet", "CoefficientShape", "Constant",
    "ScaledBell", "eval_coefficients",
    "ConfigError", "RunConfig", "default_xmax", "parse_config",
    "DiscreteParams", "DiscreteState", "DiscreteTrajectory",
    "calibration_mismatches", "compare_continuum", "default_calibration",
    "integrate_discrete", "matched_continuum_setup",
    "GrowthFit", "IncubationResult", "IntegratorFailure", "StabilityResult",
    "Trajectory", "growth_rate", "incubation_time", "integrate", "seed_state",
    "stability_experiment", "sweep",
    "EigenConvergenceError", "EigenSolution", "HypothesisConstants",
    "PositivityViolationError", "ScanResult", "adjoint_eigenpair",
    "eigenvalue_from_moments", "hypothesis_constants", "principal_eigenpair",
    "scan_lambda",
    "PolymerState", "SizeGrid", "moments",
    "below_cutoff_mass_share", "kernel_weights",
    "AdjointOperator", "BalanceResult", "FragOperator", "assemble",
    "assemble_adjoint", "macroscopic_balance", "transport_reaction_parts",
    "PACKAGE_VERSION", "ExperimentRecord", "canonical_json", "config_echo",
    "grid_hash", "write_csv",
    "BimodalityReport", "SteadyState", "StationaryCheck", "VInfResult",
    "bimodality_report", "build_steady_state", "detect_modes", "find_v_inf",
    "stationary_profile_check",
    "__version__",
]
