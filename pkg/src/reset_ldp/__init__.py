"""Wiener processes with random resetting: simulation, path analysis,
rare-event estimation, and the closed-form decay rates they converge to.
"""

from .bridge import stay_probability
from .harness import ConfigError, ExperimentConfig, build_config, parse_config_file, run
from .path_analysis import (
    StaircaseSchedule,
    TargetPath,
    TubeSpec,
    VariationPair,
    action_integral,
    in_tube,
    jordan_decompose,
    parse_path_spec,
    rate_deterministic_reset,
    rate_mixed,
    rate_negative,
    rate_positive,
    staircase_schedule,
    sup_distance,
    total_variation,
)
from .plotting import plot_rate_curve
from .process_core import (
    ProcessParams,
    ResetMark,
    RngStream,
    SamplePath,
    sample_event_times,
    simulate_path,
    sup_statistic,
)
from .rare_event import (
    CSV_FIELDS,
    BoundCheck,
    EstimateResult,
    EstimationError,
    SupLawRow,
    direct_mc_estimate,
    empirical_rate_curve,
    is_estimate,
    poisson_tail_bound,
    predicted_rate,
    sup_law_experiment,
)
from .reset_kernels import (
    DeterministicZeroKernel,
    NoDensityError,
    PowerResetKernel,
    ResetKernel,
    UniformResetKernel,
    ValidationReport,
    deterministic_zero_kernel,
    power_kernel,
    uniform_kernel,
    validate_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BoundCheck",
    "ConfigError",
    "CSV_FIELDS",
    "DeterministicZeroKernel",
    "EstimateResult",
    "EstimationError",
    "ExperimentConfig",
    "NoDensityError",
    "PowerResetKernel",
    "ProcessParams",
    "ResetKernel",
    "ResetMark",
    "RngStream",
    "SamplePath",
    "StaircaseSchedule",
    "SupLawRow",
    "TargetPath",
    "TubeSpec",
    "UniformResetKernel",
    "ValidationReport",
    "VariationPair",
    "action_integral",
    "build_config",
    "deterministic_zero_kernel",
    "direct_mc_estimate",
    "empirical_rate_curve",
    "in_tube",
    "is_estimate",
    "jordan_decompose",
    "parse_config_file",
    "parse_path_spec",
    "plot_rate_curve",
    "poisson_tail_bound",
    "power_kernel",
    "predicted_rate",
    "rate_deterministic_reset",
    "rate_mixed",
    "rate_negative",
    "rate_positive",
    "run",
    "sample_event_times",
    "simulate_path",
    "staircase_schedule",
    "stay_probability",
    "sup_distance",
    "sup_law_experiment",
    "sup_statistic",
    "total_variation",
    "uniform_kernel",
    "validate_kernel",
]
