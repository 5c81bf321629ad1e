"""Nonlocal hyperbolic aggregation model solver."""

from ._core import (
    CheckpointError,
    CliError,
    ConfigError,
    GridSpec,
    ModelParams,
    NonFiniteError,
    PopulationState,
    advance,
    classify_series,
    classify_symmetry,
    compute_signals,
    config_hash,
    initial_state,
    run,
    scheme_names,
    step,
    step_error,
    sweep,
    total_mass,
)

__all__ = [
    "CheckpointError",
    "CliError",
    "ConfigError",
    "GridSpec",
    "ModelParams",
    "NonFiniteError",
    "PopulationState",
    "advance",
    "classify_series",
    "classify_symmetry",
    "compute_signals",
    "config_hash",
    "initial_state",
    "run",
    "scheme_names",
    "step",
    "step_error",
    "sweep",
    "total_mass",
]
