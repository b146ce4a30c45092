"""Stochastic thermohaline circulation simulator."""

from ._thc import (
    SolverError,
    ValidationError,
    __version__,
    cli,
    cocycle_check,
    constants,
    inner,
    jacobian,
    ou_sample,
    parse_config,
    poisson_solve,
    read_snapshot,
    simulate,
)

__all__ = [
    "SolverError",
    "ValidationError",
    "__version__",
    "cli",
    "cocycle_check",
    "constants",
    "inner",
    "jacobian",
    "ou_sample",
    "parse_config",
    "poisson_solve",
    "read_snapshot",
    "simulate",
]
