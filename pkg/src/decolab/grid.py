"""Uniform time grids and complex-valued paths sampled on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = ["TimeGrid", "ComplexTrajectory"]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_n = n dt`` for ``n = 0 .. n_steps``.

    Parameters
    ----------
    dt : float
        Step size, > 0.
    n_steps : int
        Number of steps, >= 0; the grid has ``n_steps + 1`` points.
    """

    dt: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InvalidInputError(f"dt must be positive, got {self.dt!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise InvalidInputError(f"n_steps must be a non-negative integer, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    t0 = 0.0

    @classmethod
    def from_horizon(cls, T: float, dt: float) -> "TimeGrid":
        """Grid covering ``[0, T]``; ``T / dt`` must be (close to) an integer."""
        n = int(round(T / dt))
        if n < 0 or abs(n * dt - T) > 1e-9 * max(1.0, abs(T)):
            raise InvalidInputError(f"horizon {T} is not a multiple of dt={dt}")
        return cls(dt=float(dt), n_steps=n)

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Grid index of time ``t`` (must lie on the grid)."""
        n = int(round(t / self.dt))
        if n < 0 or n > self.n_steps or abs(n * self.dt - t) > 1e-9 * max(1.0, t):
            raise InvalidInputError(f"time {t} is not a grid point")
        return n


@dataclass(frozen=True)
class ComplexTrajectory:
    """Complex values on every point of a :class:`TimeGrid`.

    ``values`` has shape ``(n_steps + 1,)`` for a scalar path or
    ``(n_steps + 1, m)`` for ``m`` components sharing the grid.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape[:1] != (self.grid.n_steps + 1,):
            raise InvalidInputError(
                f"trajectory length {vals.shape[:1]} does not match grid of {self.grid.n_steps + 1} points"
            )
        object.__setattr__(self, "values", vals)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return self.values.shape[0]
