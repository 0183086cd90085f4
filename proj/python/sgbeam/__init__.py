"""Stern-Gerlach splitting of slow ion beams.

All quantities are SI. Configs use the same INI format as the ``sgbeam``
command-line tool.
"""

from ._core import (
    ConfigParseError,
    ConfigValidationError,
    DomainError,
    RunConfig,
    closest_approach_sweep,
    crash_bias_minimum,
    estimate,
    estimate_names,
    field,
    load_config,
    parse_config,
    run_ensemble,
    simulate,
)

__all__ = [
    "ConfigParseError",
    "ConfigValidationError",
    "DomainError",
    "RunConfig",
    "closest_approach_sweep",
    "crash_bias_minimum",
    "estimate",
    "estimate_names",
    "field",
    "load_config",
    "parse_config",
    "run_ensemble",
    "simulate",
]
