"""Exception hierarchy shared by all decolab modules."""

from __future__ import annotations


class DecolabError(Exception):
    """Base class for every error raised by the library."""


class InvalidInputError(DecolabError, ValueError):
    """Argument outside the documented domain (sizes, signs, shapes)."""


class InvalidDimensionError(InvalidInputError):
    """Fock truncation dimension below the supported minimum."""


class InvalidBathError(InvalidInputError):
    """Bath description with non-positive frequencies or mismatched arrays."""


class StepSizeError(InvalidInputError):
    """Time step violates the stability bound of the selected integrator."""


class NumericalBlowupError(DecolabError, FloatingPointError):
    """A trajectory produced non-finite values.

    Parameters
    ----------
    message : str
        Human readable description.
    diagnostics : dict, optional
        Step index, time, trajectory index and norms at the point of failure.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class IntegrationFailure(DecolabError, RuntimeError):
    """A monitored invariant of the master equation was breached."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(DecolabError, ValueError):
    """Invalid configuration value or option name."""


class StrictConfigError(ConfigError):
    """Configuration document contains keys that are not recognized."""


class ConfigParseError(ConfigError):
    """Configuration document is not well formed.

    Attributes
    ----------
    line, column : int or None
        Location reported by the parser, 1-based.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column
