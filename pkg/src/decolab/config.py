"""Experiment configuration: a flat TOML document with strict keys."""

from __future__ import annotations

import math
import re
import sys
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError, ConfigParseError, StrictConfigError
from .fock import ModelParams

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on older interpreters
    import tomli as tomllib

__all__ = ["EXPERIMENTS", "ExperimentConfig", "parse_config", "load_config"]

#: Experiment names with one-line descriptions.
EXPERIMENTS = {
    "representation-checks": "Monte Carlo path representation of the free oscillator against exact evolution",
    "noise-covariance": "effective noise covariances: finite-bath closed forms and the Ohmic white-noise limit",
    "kernel-convergence": "integrated memory kernel of the discretized Ohmic bath against a/2",
    "reduced-vs-full": "pathwise gap between the memory equation and the full coupled bath",
    "markov-bridge": "two-level coherence of the finite bath as the mode spacing halves",
    "unravel-vs-lindblad": "noise-sharing conventions of the stochastic Schroedinger ensemble against Lindblad",
    "decoherence-rates": "fitted energy-basis coherence decay rates against eps w0 (sqrt j - sqrt k)^2",
    "localization-summary": "coherence decay in the momentum and position representations",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run configuration.

    Physical defaults are ``hbar = 1``, ``mass = 1``, ``omega0 = 1``,
    ``a = 0.2``; ``dim = 16`` and ``seed = 1``. Settings left as None fall back
    to per-experiment defaults.
    """

    experiment: str | None = None
    hbar: float = 1.0
    mass: float = 1.0
    omega0: float = 1.0
    a: float = 0.2
    n_modes: int | None = None
    delta_omega: float | None = None
    dt: float | None = None
    T: float | None = None
    n_outer: int | None = None
    n_inner: int | None = None
    dim: int = 16
    seed: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown name {self.experiment!r}; choose from {sorted(EXPERIMENTS)}")
        for name in ("hbar", "mass", "omega0", "delta_omega", "dt", "T"):
            val = getattr(self, name)
            if val is None:
                continue
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val) or val <= 0:
                raise ConfigError(f"{name}: must be a positive number, got {val!r}")
            object.__setattr__(self, name, float(val))
        if isinstance(self.a, bool) or not isinstance(self.a, (int, float)) or not math.isfinite(self.a) or self.a < 0:
            raise ConfigError(f"a: must be a non-negative number, got {self.a!r}")
        object.__setattr__(self, "a", float(self.a))
        if self.mass != 1.0:
            raise ConfigError(f"mass: only mass = 1 is supported, got {self.mass!r}")
        for name, low in (("n_modes", 1), ("n_outer", 2), ("n_inner", 0), ("dim", 2), ("seed", 0)):
            val = getattr(self, name)
            if val is None and name not in ("dim", "seed"):
                continue
            if isinstance(val, bool) or not isinstance(val, int) or val < low:
                raise ConfigError(f"{name}: must be an integer >= {low}, got {val!r}")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ConfigError("out_dir: must be a non-empty string")

    @property
    def epsilon(self) -> float:
        return self.a / (2.0 * self.omega0)

    def params(self) -> ModelParams:
        return ModelParams(hbar=self.hbar, omega0=self.omega0, a=self.a, mass=self.mass)

    def echo(self) -> dict:
        """All settings plus the derived damping ratio."""
        out = asdict(self)
        out["epsilon"] = self.epsilon
        return out


_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a TOML document into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigParseError
        Malformed document; carries the line and column.
    StrictConfigError
        Unknown or nested keys.
    ConfigError
        Values that violate the invariants.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        if line is None:
            # older parsers only put the position in the message
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        raise ConfigParseError(f"malformed config: {exc}", line, col) from None
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise StrictConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**doc)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
