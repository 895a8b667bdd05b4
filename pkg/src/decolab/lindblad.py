"""Lindblad master equation of the damped oscillator in the Fock basis.

    d rho / dt = -(i/hbar) [H0, rho] - (eps/hbar) {H0, rho} + hbar eps L rho L^dagger

with ``H0 = hbar w0 a^dagger a`` and ``L = sqrt(2 w0 / hbar) a``. Entrywise
this is the amplitude-damping recursion

    d rho_jk / dt = -i w0 (j - k) rho_jk - eps w0 (j + k) rho_jk
                    + 2 eps w0 sqrt((j + 1)(k + 1)) rho_{j+1,k+1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationFailure, InvalidInputError, StepSizeError
from .fock import FockOperators, ModelParams, build_operators

__all__ = [
    "HERMITICITY_TOL",
    "TRACE_TOL_PER_TIME",
    "POSITIVITY_TOL",
    "FockDensityMatrix",
    "MasterTrajectory",
    "lindblad_rhs",
    "energy_rep_rhs",
    "integrate_master",
    "analytic_offdiagonal_decay",
    "asymptotic_decay_rate",
    "localization_rates",
    "fit_decay_rate",
    "representation_coherence",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL_PER_TIME = 1e-10
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class FockDensityMatrix:
    """Density matrix in the truncated energy basis at a given time."""

    entries: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidInputError(f"density matrix must be square, got shape {rho.shape}")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    @classmethod
    def pure(cls, psi, time: float = 0.0) -> "FockDensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()), time)


def _entries(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, FockDensityMatrix) else np.asarray(rho, dtype=complex)


def lindblad_rhs(rho, ops: FockOperators, params: ModelParams) -> np.ndarray:
    """Time derivative of ``rho`` under the full Lindblad generator."""
    r = _entries(rho)
    if r.shape[-2:] != (ops.dim, ops.dim):
        raise InvalidInputError(f"density matrix of shape {r.shape} does not match dim={ops.dim}")
    H, L = ops.H0, ops.L
    hb, eps = params.hbar, params.epsilon
    Hr = H @ r
    rH = r @ H
    jump = L @ r @ L.conj().T
    return -1j / hb * (Hr - rH) - eps / hb * (Hr + rH) + hb * eps * jump


class _EnergyRep:
    """Precomputed coefficients of the entrywise recursion for one dimension."""

    def __init__(self, dim: int, params: ModelParams):
        j = np.arange(dim)
        w0, eps = params.omega0, params.epsilon
        self.diag = -1j * w0 * (j[:, None] - j[None, :]) - eps * w0 * (j[:, None] + j[None, :])
        up = np.sqrt(np.outer(j[1:], j[1:]).astype(float))
        self.feed = 2.0 * eps * w0 * up

    def __call__(self, r: np.ndarray) -> np.ndarray:
        out = self.diag * r
        out[..., :-1, :-1] += self.feed * r[..., 1:, 1:]
        return out


def energy_rep_rhs(rho, params: ModelParams) -> np.ndarray:
    """Time derivative from the entrywise energy-basis recursion.

    The level above the truncation is treated as empty.
    """
    r = _entries(rho)
    if r.ndim < 2 or r.shape[-1] != r.shape[-2]:
        raise InvalidInputError("density matrix must be square")
    return _EnergyRep(r.shape[-1], params)(r)


@dataclass(frozen=True)
class MasterTrajectory:
    """Sampled solution of the master equation.

    Attributes
    ----------
    times : ndarray
    states : ndarray, shape (n_samples, ..., d, d)
    max_trace_drift, max_hermiticity_error, min_eigenvalue : float
        Extremes seen by the invariant monitors (``nan`` if not checked).
    """

    times: np.ndarray
    states: np.ndarray
    max_trace_drift: float
    max_hermiticity_error: float
    min_eigenvalue: float

    def at(self, i: int) -> FockDensityMatrix:
        return FockDensityMatrix(self.states[i], float(self.times[i]))

    def element(self, j: int, k: int) -> np.ndarray:
        return self.states[:, j, k]


def integrate_master(
    rho0,
    params: ModelParams,
    T: float,
    dt: float,
    generator: str = "full",
    sample_every: int = 1,
    monitor: bool = True,
    check_positivity: bool | None = None,
    check_every: int = 1,
    observer=None,
) -> MasterTrajectory:
    """Classical RK4 integration of the master equation on ``[0, T]``.

    Parameters
    ----------
    rho0 : FockDensityMatrix or array_like
        A single ``(d, d)`` matrix or a stack ``(..., d, d)`` integrated together.
    params : ModelParams
    T, dt : float
        Horizon and step; ``dt omega0 dim <= 0.05`` is required and ``T / dt``
        is rounded up to a whole number of steps with ``dt`` shrunk to match.
    generator : {"full", "energy-rep"}
    sample_every : int
        Store every n-th step (the final state is always stored).
    monitor : bool
        Check trace drift (``1e-10`` per unit time, relative to the initial
        trace scale) and hermiticity (``1e-12`` times the entry scale) every
        step, raising :class:`IntegrationFailure` on a breach.
    check_positivity : bool, optional
        Also require the smallest eigenvalue to stay above ``-1e-8``. By
        default this is enabled when ``rho0`` is positive semidefinite.
    check_every : int
        Stride of the (costlier) positivity check.
    observer : callable, optional
        ``observer(t, rho)`` is called on every step, e.g. to track a few
        entries at full time resolution without storing all states.
    """
    r = _entries(rho0).copy()
    if r.ndim < 2 or r.shape[-1] != r.shape[-2]:
        raise InvalidInputError(f"density matrix must be square, got shape {r.shape}")
    dim = r.shape[-1]
    if dt <= 0 or T < 0:
        raise InvalidInputError("dt must be positive and T non-negative")
    n_steps = int(np.ceil(T / dt - 1e-9)) if T > 0 else 0
    if n_steps:
        dt = T / n_steps
    if dt * params.omega0 * dim > 0.05 * (1 + 1e-12):
        raise StepSizeError(f"dt*omega0*dim = {dt * params.omega0 * dim:.3g} exceeds 0.05")
    if generator == "full":
        ops = build_operators(dim, params)
        rhs = lambda x: lindblad_rhs(x, ops, params)  # noqa: E731
    elif generator == "energy-rep":
        rhs = _EnergyRep(dim, params)
    else:
        raise InvalidInputError(f"unknown generator {generator!r}")

    def herm_err(x):
        return float(np.max(np.abs(x - np.swapaxes(x, -1, -2).conj())))

    def min_eig(x):
        return float(np.min(np.linalg.eigvalsh(0.5 * (x + np.swapaxes(x, -1, -2).conj()))))

    scale = max(1.0, float(np.max(np.abs(r))))
    tr0 = np.trace(r, axis1=-2, axis2=-1)
    if check_positivity is None:
        check_positivity = monitor and herm_err(r) <= 1e-12 * scale and min_eig(r) >= -1e-12 * scale
    max_drift = 0.0
    max_herm = herm_err(r)
    lowest = min_eig(r) if check_positivity else np.nan

    times = [0.0]
    states = [r.copy()]
    if observer is not None:
        observer(0.0, r)
    for n in range(n_steps):
        k1 = rhs(r)
        k2 = rhs(r + 0.5 * dt * k1)
        k3 = rhs(r + 0.5 * dt * k2)
        k4 = rhs(r + dt * k3)
        r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (n + 1) * dt
        if monitor:
            drift = float(np.max(np.abs(np.trace(r, axis1=-2, axis2=-1) - tr0)))
            herr = herm_err(r)
            max_drift = max(max_drift, drift)
            max_herm = max(max_herm, herr)
            diag = {"step": n + 1, "time": t, "trace_drift": drift, "hermiticity": herr}
            if not np.all(np.isfinite(r)):
                raise IntegrationFailure("non-finite density matrix", diag)
            if drift > TRACE_TOL_PER_TIME * max(1.0, t) * scale:
                raise IntegrationFailure(f"trace drift {drift:.3e} at t={t:g}", diag)
            if herr > HERMITICITY_TOL * scale:
                raise IntegrationFailure(f"hermiticity error {herr:.3e} at t={t:g}", diag)
            if check_positivity and ((n + 1) % check_every == 0 or n + 1 == n_steps):
                ev = min_eig(r)
                lowest = min(lowest, ev)
                if ev < -POSITIVITY_TOL:
                    diag["min_eigenvalue"] = ev
                    raise IntegrationFailure(f"negative eigenvalue {ev:.3e} at t={t:g}", diag)
        if observer is not None:
            observer(t, r)
        if (n + 1) % sample_every == 0 or n + 1 == n_steps:
            times.append(t)
            states.append(r.copy())
    return MasterTrajectory(np.array(times), np.array(states), max_drift, max_herm, float(lowest))


def analytic_offdiagonal_decay(j: int, k: int, t, params: ModelParams):
    """Large-level approximation of the multiplier of ``rho_jk(t) / rho_jk(0)``.

    ``exp(-(i/hbar)(E_j - E_k) t - (eps/hbar)(sqrt(E_j) - sqrt(E_k))^2 t)`` with
    ``E_n = hbar w0 n``.
    """
    if j < 0 or k < 0:
        raise InvalidInputError("level indices must be non-negative")
    Ej = params.hbar * params.omega0 * j
    Ek = params.hbar * params.omega0 * k
    t = np.asarray(t, dtype=float)
    return np.exp(-1j / params.hbar * (Ej - Ek) * t - params.epsilon / params.hbar * (np.sqrt(Ej) - np.sqrt(Ek)) ** 2 * t)


def asymptotic_decay_rate(j: int, k: int, params: ModelParams) -> float:
    """``eps w0 (sqrt(j) - sqrt(k))^2``, the damping rate of the multiplier above."""
    return params.epsilon * params.omega0 * (np.sqrt(j) - np.sqrt(k)) ** 2


def localization_rates(params: ModelParams, regime: str, delta: float) -> float:
    """Coherence decay rates in the two kinetic/potential-dominated regimes.

    Parameters
    ----------
    regime : {"momentum", "position"}
    delta : float
        ``p - p'`` for momentum, ``X - X'`` for position.

    Returns
    -------
    float
        ``(eps / 2 hbar) dp^2`` or ``(eps w0^2 / hbar) dX^2``.
    """
    if regime == "momentum":
        return params.epsilon / (2.0 * params.hbar) * delta**2
    if regime == "position":
        return params.epsilon * params.omega0**2 / params.hbar * delta**2
    raise InvalidInputError(f"unknown regime {regime!r}")


def fit_decay_rate(times, values, skip_fraction: float = 0.05) -> float:
    """Least-squares decay rate of ``log|values|`` versus time.

    The first ``skip_fraction`` of the time span is left out to avoid the
    initial transient.
    """
    times = np.asarray(times, dtype=float)
    mag = np.abs(np.asarray(values))
    t0 = times[0] + skip_fraction * (times[-1] - times[0])
    keep = (times >= t0) & (mag > 0)
    if keep.sum() < 2:
        raise InvalidInputError("not enough points for a rate fit")
    slope = np.polyfit(times[keep], np.log(mag[keep]), 1)[0]
    return float(-slope)


def representation_coherence(states, basis: np.ndarray) -> np.ndarray:
    """Normalized coherence between two points of a continuous representation.

    Parameters
    ----------
    states : ndarray, shape (..., d, d)
    basis : ndarray, shape (d, 2)
        Columns ``<y_1|n>`` and ``<y_2|n>`` for the two points.

    Returns
    -------
    ndarray
        ``|rho(y1, y2)| / sqrt(rho(y1, y1) rho(y2, y2))``.
    """
    u = np.asarray(basis)
    m = np.einsum("ni,...nk,kj->...ij", u, states, u.conj())
    return np.abs(m[..., 0, 1]) / np.sqrt(np.abs(m[..., 0, 0] * m[..., 1, 1]))
