"""Truncated Fock-space operators and wavefunctions of the system oscillator.

Everything here is built for unit mass. The Hamiltonian carries no
zero-point term, so that it factorizes exactly through the jump operator
``L = sqrt(2 omega0 / hbar) a`` as ``H0 = (hbar**2 / 2) L^dagger L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammaln

from .errors import InvalidDimensionError, InvalidInputError

__all__ = [
    "LAMBDA",
    "ModelParams",
    "FockOperators",
    "build_operators",
    "hermite_functions",
    "eigenstate_wavefunction",
    "quadrature_operators",
    "squeezed_vacuum",
    "position_basis",
    "momentum_basis",
]

#: Complex diffusion coefficient; ``LAMBDA**2 == 1j``.
LAMBDA = complex(np.sqrt(0.5), np.sqrt(0.5))


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the oscillator and its reservoir.

    Parameters
    ----------
    hbar : float
        Action scale, > 0.
    omega0 : float
        Oscillator angular frequency, > 0.
    a : float
        Ohmic friction constant, >= 0.
    mass : float
        Fixed to 1; accepted only so configs can state it explicitly.
    """

    hbar: float = 1.0
    omega0: float = 1.0
    a: float = 0.2
    mass: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "omega0"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise InvalidInputError(f"{name} must be positive and finite, got {val!r}")
        if not np.isfinite(self.a) or self.a < 0:
            raise InvalidInputError(f"a must be non-negative and finite, got {self.a!r}")
        if self.mass != 1.0:
            raise InvalidInputError(f"mass is fixed to 1, got {self.mass!r}")

    @property
    def epsilon(self) -> float:
        """Dimensionless damping ``a / (2 omega0)``."""
        return self.a / (2.0 * self.omega0)

    @property
    def lam(self) -> complex:
        return LAMBDA

    @property
    def sigma(self) -> float:
        """Diffusion scale ``sqrt(hbar / mass)``."""
        return float(np.sqrt(self.hbar / self.mass))

    @classmethod
    def from_epsilon(cls, epsilon: float, omega0: float = 1.0, hbar: float = 1.0) -> "ModelParams":
        """Build parameters from the damping ratio instead of the friction."""
        return cls(hbar=hbar, omega0=omega0, a=2.0 * epsilon * omega0)


@dataclass(frozen=True)
class FockOperators:
    """Operators on the span of ``|0>, ..., |dim-1>``.

    Attributes
    ----------
    dim : int
    lower : ndarray
        Annihilation matrix, ``lower[k-1, k] = sqrt(k)``.
    L : ndarray
        Jump operator ``sqrt(2 omega0 / hbar) * lower``.
    H0 : ndarray
        ``(hbar**2 / 2) L^dagger L``; diagonal with entries ``hbar omega0 k``.
    """

    dim: int
    lower: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    H0: np.ndarray = field(repr=False)

    @property
    def energies(self) -> np.ndarray:
        return np.real(np.diag(self.H0))


def build_operators(dim: int, params: ModelParams) -> FockOperators:
    """Annihilation, jump and Hamiltonian matrices in a truncated Fock basis.

    Parameters
    ----------
    dim : int
        Number of retained levels, at least 2.
    params : ModelParams

    Returns
    -------
    FockOperators
    """
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"dim must be an integer >= 2, got {dim!r}")
    dim = int(dim)
    lower = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    L = np.sqrt(2.0 * params.omega0 / params.hbar) * lower
    # computed from L so that the factorization holds bit for bit
    H0 = 0.5 * params.hbar**2 * (L.conj().T @ L)
    for arr in (lower, L, H0):
        arr.setflags(write=False)
    return FockOperators(dim=dim, lower=lower, L=L, H0=H0)


def hermite_functions(n_max: int, xi) -> np.ndarray:
    """Normalized Hermite functions ``h_0 .. h_n_max`` at dimensionless points.

    Uses the three-term recurrence
    ``h_n = sqrt(2/n) xi h_{n-1} - sqrt((n-1)/n) h_{n-2}``, which is stable
    well beyond the orders needed here.

    Returns
    -------
    ndarray, shape ``(n_max + 1,) + xi.shape``
    """
    if n_max < 0:
        raise InvalidInputError("n_max must be >= 0")
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(2, n_max + 1):
        out[n] = np.sqrt(2.0 / n) * xi * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def eigenstate_wavefunction(p: int, X, params: ModelParams) -> np.ndarray:
    """Position-space eigenfunction of level ``p`` sampled on a grid.

    The Gaussian-times-Hermite profile is renormalized with the trapezoid
    rule on the supplied grid, so the result has unit discrete norm.

    Parameters
    ----------
    p : int
        Level index, >= 0.
    X : array_like
        Sorted position grid with at least two points.
    params : ModelParams

    Returns
    -------
    ndarray of complex
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 1 or X.size < 2:
        raise InvalidInputError("position grid needs at least two points")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("position grid must be finite")
    if int(p) != p or p < 0:
        raise InvalidInputError(f"level index must be a non-negative integer, got {p!r}")
    scale = np.sqrt(params.mass * params.omega0 / params.hbar)
    psi = hermite_functions(int(p), X * scale)[int(p)]
    norm2 = trapezoid(psi**2, X)
    if norm2 <= 0:
        raise InvalidInputError("grid does not resolve the requested eigenfunction")
    return (psi / np.sqrt(norm2)).astype(complex)


def quadrature_operators(dim: int, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum matrices ``(X, P)`` in the truncated basis."""
    ops = build_operators(dim, params)
    a = ops.lower
    ad = a.conj().T
    X = np.sqrt(params.hbar / (2.0 * params.omega0)) * (a + ad)
    P = 1j * np.sqrt(params.hbar * params.omega0 / 2.0) * (ad - a)
    return X, P


def squeezed_vacuum(dim: int, squeeze: float) -> np.ndarray:
    """Fock amplitudes of a squeezed vacuum, renormalized after truncation.

    ``squeeze > 0`` widens the momentum distribution by ``exp(squeeze)`` and
    narrows the position distribution by the same factor; ``squeeze < 0``
    does the opposite.
    """
    if dim < 1:
        raise InvalidDimensionError("dim must be >= 1")
    c = np.zeros(dim, dtype=complex)
    m = np.arange((dim + 1) // 2)
    t = np.tanh(abs(squeeze))
    with np.errstate(divide="ignore", invalid="ignore"):
        logmag = 0.5 * gammaln(2 * m + 1) - m * np.log(2.0) - gammaln(m + 1) + m * np.log(t)
    logmag[0] = 0.0
    sign = (-1.0) ** m if squeeze > 0 else np.ones_like(m, dtype=float)
    c[2 * m] = sign * np.exp(logmag)
    return c / np.linalg.norm(c)


def position_basis(dim: int, X, params: ModelParams) -> np.ndarray:
    """Matrix ``U[n, i] = <X_i | n>`` for converting Fock data to positions."""
    scale = np.sqrt(params.omega0 / params.hbar)
    return hermite_functions(dim - 1, np.asarray(X, float) * scale) * np.sqrt(scale)


def momentum_basis(dim: int, p, params: ModelParams) -> np.ndarray:
    """Matrix ``U[n, i] = <p_i | n>`` (includes the ``(-i)**n`` phase)."""
    scale = 1.0 / np.sqrt(params.hbar * params.omega0)
    h = hermite_functions(dim - 1, np.asarray(p, float) * scale) * np.sqrt(scale)
    phase = (-1j) ** np.arange(dim)
    return h * phase.reshape((-1,) + (1,) * (h.ndim - 1))
