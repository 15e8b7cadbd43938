"""Cell-based probabilistic safety checking of neural network controllers."""

from ._cellcheck import (
    ContinuumWorld,
    DimensionError,
    Error,
    IoError,
    Model,
    Network,
    NonFiniteError,
    ParseError,
    PartitionError,
    ProbField,
    ShapeError,
    ValidationError,
    VcasModel,
    adaptive_verify,
    check,
    load_network,
    monte_carlo,
    possible_actions,
    run_cli,
)

__all__ = [
    "ContinuumWorld",
    "DimensionError",
    "Error",
    "IoError",
    "Model",
    "Network",
    "NonFiniteError",
    "ParseError",
    "PartitionError",
    "ProbField",
    "ShapeError",
    "ValidationError",
    "VcasModel",
    "adaptive_verify",
    "check",
    "load_network",
    "monte_carlo",
    "possible_actions",
    "run_cli",
]
