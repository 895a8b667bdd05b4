"""Stochastic simulation of a damped quantum oscillator, from a finite
reservoir down to the Lindblad master equation."""

from .errors import (
    ConfigError,
    ConfigParseError,
    DecolabError,
    IntegrationFailure,
    InvalidBathError,
    InvalidDimensionError,
    InvalidInputError,
    NumericalBlowupError,
    StepSizeError,
    StrictConfigError,
)
from .fock import LAMBDA, FockOperators, ModelParams, build_operators, eigenstate_wavefunction
from .grid import ComplexTrajectory, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "LAMBDA",
    "ModelParams",
    "FockOperators",
    "build_operators",
    "eigenstate_wavefunction",
    "TimeGrid",
    "ComplexTrajectory",
    "DecolabError",
    "InvalidInputError",
    "InvalidDimensionError",
    "InvalidBathError",
    "StepSizeError",
    "NumericalBlowupError",
    "IntegrationFailure",
    "ConfigError",
    "StrictConfigError",
    "ConfigParseError",
]
