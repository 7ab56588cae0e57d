"""Entanglement generation between two atom-resonator nodes on a chiral waveguide."""

from .errors import (
    ConfigError,
    IntegrationError,
    InvariantError,
    ParameterError,
    PreconditionError,
)
from .params import NetworkParams, Variant

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "IntegrationError",
    "InvariantError",
    "NetworkParams",
    "ParameterError",
    "PreconditionError",
    "Variant",
    "__version__",
]
