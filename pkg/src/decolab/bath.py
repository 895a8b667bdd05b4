"""Finite reservoir of oscillators coupled linearly to the system oscillator.

The coupled drift of ``z = (Q, q_1, ..., q_n)`` is

    dQ   = -i w0 Q dt - sum_k v_k sqrt(w_k / w0) q_k dt + lam sigma db
    dq_k = -i w_k q_k dt + v_k sqrt(w0 / w_k) Q dt   + lam sigma db_k

After the rescaling ``q_k -> sqrt(w_k / w0) q_k`` the drift matrix is
anti-Hermitian, so its propagator is computed from a Hermitian
eigendecomposition and the weighted norm
``|Q|^2 + sum_k (w_k / w0) |q_k|^2`` is conserved without noise.

Eliminating the bath modes gives a closed equation for ``Q`` with memory
kernel ``K(s) = sum_k v_k^2 exp(-i w_k s)`` and the two effective noises
built in :mod:`decolab.noise`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import InvalidBathError, InvalidInputError, NumericalBlowupError, StepSizeError
from .fock import LAMBDA, ModelParams
from .grid import ComplexTrajectory, TimeGrid

if TYPE_CHECKING:  # pragma: no cover
    from .noise import BathInitials, DriverPaths

__all__ = [
    "MAX_COUPLED_MODES",
    "RecurrenceWarning",
    "BathSpec",
    "ohmic_bath",
    "memory_kernel",
    "integrated_kernel",
    "coupled_drift",
    "CoupledPropagator",
    "simulate_coupled",
    "simulate_reduced",
    "weighted_energy",
]

#: Largest bath the coupled solver accepts; its dense propagator needs
#: ``16 (n + 1)**2`` bytes, i.e. about 4.3 GB at this size.
MAX_COUPLED_MODES = 16384


class RecurrenceWarning(UserWarning):
    """Horizon long enough for the discrete bath to revive."""


@dataclass(frozen=True)
class BathSpec:
    """Mode frequencies and real couplings of a finite bath."""

    omegas: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        v = np.atleast_1d(np.asarray(self.couplings, dtype=float))
        if w.ndim != 1 or w.shape != v.shape:
            raise InvalidBathError(f"omegas {w.shape} and couplings {v.shape} must be equal-length vectors")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise InvalidBathError("all mode frequencies must be positive and finite")
        if np.any(~np.isfinite(v)):
            raise InvalidBathError("couplings must be finite")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "couplings", v)

    @property
    def n_modes(self) -> int:
        return self.omegas.shape[0]

    @property
    def spacing(self) -> float | None:
        """Smallest gap between sorted frequencies (None for one mode)."""
        if self.n_modes < 2:
            return None
        return float(np.min(np.diff(np.sort(self.omegas))))


def ohmic_bath(n_modes: int, delta_omega: float, a: float, placement: str = "endpoint") -> BathSpec:
    """Equally spaced bath with flat couplings ``v_k^2 = a delta_omega / pi``.

    Parameters
    ----------
    n_modes : int
    delta_omega : float
        Frequency spacing.
    a : float
        Friction constant, >= 0.
    placement : {"endpoint", "midpoint"}
        ``"endpoint"`` puts modes at ``k delta_omega`` (k = 1..n), the
        right-endpoint rule for the continuum. ``"midpoint"`` uses
        ``(k - 1/2) delta_omega``, which keeps the weight of the lowest
        frequency cell and makes ``int_0^T Re K`` exactly ``a / 2`` for
        ``T delta_omega < 2 pi``.
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise InvalidInputError(f"n_modes must be a positive integer, got {n_modes!r}")
    if not np.isfinite(delta_omega) or delta_omega <= 0:
        raise InvalidInputError(f"delta_omega must be positive, got {delta_omega!r}")
    if not np.isfinite(a) or a < 0:
        raise InvalidInputError(f"a must be non-negative, got {a!r}")
    k = np.arange(1, int(n_modes) + 1, dtype=float)
    if placement == "endpoint":
        omegas = k * delta_omega
    elif placement == "midpoint":
        omegas = (k - 0.5) * delta_omega
    else:
        raise InvalidInputError(f"unknown placement {placement!r}")
    couplings = np.full(int(n_modes), np.sqrt(a * delta_omega / np.pi))
    return BathSpec(omegas, couplings)


def memory_kernel(spec: BathSpec, s):
    """``K(s) = sum_k v_k^2 exp(-i w_k s)``; vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    v2 = spec.couplings**2
    out = np.exp(-1j * s[..., None] * spec.omegas) @ v2
    return out[()] if out.ndim == 0 else out


def integrated_kernel(spec: BathSpec, T):
    """Closed form of ``int_0^T Re K(s) ds = sum_k v_k^2 sin(w_k T) / w_k``."""
    T = np.asarray(T, dtype=float)
    out = np.sin(T[..., None] * spec.omegas) @ (spec.couplings**2 / spec.omegas)
    return out[()] if out.ndim == 0 else out


def coupled_drift(spec: BathSpec, params: ModelParams) -> np.ndarray:
    """Drift matrix of ``(Q, q_1, ..., q_n)`` in the original variables."""
    n = spec.n_modes
    w0 = params.omega0
    ratio = np.sqrt(spec.omegas / w0)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, 0] = -1j * w0
    M[0, 1:] = -spec.couplings * ratio
    M[1:, 0] = spec.couplings / ratio
    M[1:, 1:] = np.diag(-1j * spec.omegas)
    return M


class CoupledPropagator:
    """Exact propagator ``exp(M t)`` of the coupled drift.

    Uses the Hermitian matrix ``i S M S^{-1}`` with
    ``S = diag(1, sqrt(w_k / w0))``.
    """

    def __init__(self, spec: BathSpec, params: ModelParams):
        if spec.n_modes > MAX_COUPLED_MODES:
            raise InvalidBathError(f"coupled solver supports at most {MAX_COUPLED_MODES} modes")
        self.spec = spec
        self.params = params
        self.scale = np.concatenate(([1.0], np.sqrt(spec.omegas / params.omega0)))
        H = np.zeros((spec.n_modes + 1,) * 2, dtype=complex)
        H[0, 0] = params.omega0
        H[0, 1:] = -1j * spec.couplings
        H[1:, 0] = 1j * spec.couplings
        H[1:, 1:] = np.diag(spec.omegas)
        self.eigvals, self.eigvecs = np.linalg.eigh(H)

    def matrix(self, t: float) -> np.ndarray:
        """Dense ``exp(M t)`` in the original variables."""
        V = self.eigvecs
        U = (V * np.exp(-1j * self.eigvals * t)) @ V.conj().T
        return U * (1.0 / self.scale)[:, None] * self.scale[None, :]

    def system_response(self, times) -> np.ndarray:
        """``[exp(M t)]_{00}`` for each ``t``: the noiseless response of ``Q`` to ``Q(0) = 1``."""
        times = np.asarray(times, dtype=float)
        w = np.abs(self.eigvecs[0]) ** 2
        return np.exp(-1j * np.multiply.outer(times, self.eigvals)) @ w


def weighted_energy(Q, q, spec: BathSpec, params: ModelParams):
    """``|Q|^2 + sum_k (w_k / w0) |q_k|^2``, conserved by the noiseless drift."""
    q = np.asarray(q)
    return np.abs(Q) ** 2 + (np.abs(q) ** 2) @ (spec.omegas / params.omega0)


def _warn_recurrence(spec: BathSpec, T: float) -> None:
    gap = spec.spacing
    if gap is not None and gap > 0 and T > np.pi / gap:
        warnings.warn(
            f"horizon T={T:g} exceeds pi/delta_omega={np.pi / gap:g}; the discrete bath may revive",
            RecurrenceWarning,
            stacklevel=3,
        )


def simulate_coupled(
    spec: BathSpec,
    params: ModelParams,
    initials: "BathInitials",
    Q0: complex,
    drivers: "DriverPaths",
    stepper: str = "exact",
    noise: bool = True,
    store_modes: bool = True,
) -> tuple[ComplexTrajectory, ComplexTrajectory | None]:
    """Integrate the system oscillator together with every bath mode.

    Parameters
    ----------
    spec : BathSpec
    params : ModelParams
    initials : BathInitials
        Real starting positions ``q_k(0) = x_k``.
    Q0 : complex
    drivers : DriverPaths
        Increments for the system and every mode.
    stepper : {"exact", "euler"}
        ``"exact"`` applies ``exp(M dt)`` to ``z_n + B db_n`` (left-point
        noise), so it reproduces the closed-form Ito sums of the decoupled
        oscillators exactly. ``"euler"`` is Euler-Maruyama and requires
        ``dt max(w) <= 0.1``.
    noise : bool
        If False the Brownian increments are ignored.
    store_modes : bool
        Return the bath mode paths as well (memory ``16 n_modes n_steps`` bytes).

    Returns
    -------
    Q : ComplexTrajectory
    q : ComplexTrajectory or None
        Mode paths of shape ``(n_steps + 1, n_modes)``.
    """
    if drivers.n_modes != spec.n_modes:
        raise InvalidInputError(f"drivers carry {drivers.n_modes} bath streams, bath has {spec.n_modes} modes")
    x = np.asarray(initials.x, dtype=float)
    if x.shape != (spec.n_modes,):
        raise InvalidInputError("initial values do not match the bath size")
    if spec.n_modes > MAX_COUPLED_MODES:
        raise InvalidBathError(f"coupled solver supports at most {MAX_COUPLED_MODES} modes; use simulate_reduced")
    grid = drivers.grid
    dt = grid.dt
    _warn_recurrence(spec, grid.T)

    z = np.concatenate(([complex(Q0)], x.astype(complex)))
    inc = np.vstack((drivers.b_sys[None, :], drivers.b_bath)) if noise else None
    amp = LAMBDA * params.sigma
    n_steps = grid.n_steps
    Qs = np.empty(n_steps + 1, dtype=complex)
    qs = np.empty((n_steps + 1, spec.n_modes), dtype=complex) if store_modes else None
    Qs[0] = z[0]
    if store_modes:
        qs[0] = z[1:]

    if stepper == "exact":
        prop = CoupledPropagator(spec, params)
        # step in the scaled eigenbasis: y = V^H S z
        V = prop.eigvecs
        S = prop.scale
        rot = np.exp(-1j * prop.eigvals * dt)
        y = V.conj().T @ (S * z)
        back = V / S[:, None]
        chunk = max(1, min(n_steps, 2048))
        for start in range(0, n_steps, chunk):
            stop = min(n_steps, start + chunk)
            if noise:
                kicks = V.conj().T @ (S[:, None] * (amp * inc[:, start:stop]))
            ys = np.empty((stop - start, y.size), dtype=complex)
            for j in range(stop - start):
                if noise:
                    y = rot * (y + kicks[:, j])
                else:
                    y = rot * y
                ys[j] = y
            zs = ys @ back.T
            Qs[start + 1 : stop + 1] = zs[:, 0]
            if store_modes:
                qs[start + 1 : stop + 1] = zs[:, 1:]
    elif stepper == "euler":
        wmax = max(float(np.max(spec.omegas)), params.omega0)
        if dt * wmax > 0.1:
            raise StepSizeError(f"euler stepping needs dt*max(omega) <= 0.1, got {dt * wmax:.3g}")
        M = coupled_drift(spec, params)
        for n in range(n_steps):
            dz = (M @ z) * dt
            if noise:
                dz = dz + amp * inc[:, n]
            z = z + dz
            Qs[n + 1] = z[0]
            if store_modes:
                qs[n + 1] = z[1:]
    else:
        raise InvalidInputError(f"unknown stepper {stepper!r}")

    if not np.all(np.isfinite(Qs)):
        raise NumericalBlowupError("coupled simulation produced non-finite values", {"stepper": stepper})
    q_traj = ComplexTrajectory(grid, qs) if store_modes else None
    return ComplexTrajectory(grid, Qs), q_traj


def simulate_reduced(
    spec: BathSpec,
    params: ModelParams,
    N_D: ComplexTrajectory | None,
    N_R: ComplexTrajectory | None,
    Q0: complex,
    drivers: "DriverPaths | None",
    noise: bool = True,
) -> ComplexTrajectory:
    """Integrate the closed memory equation for ``Q``.

    ``dQ = -i w0 Q dt - (int_0^t K(t - s) Q(s) ds) dt - (N_D + N_R) dt + lam sigma db``

    The free rotation is applied exactly and the forcing
    ``F = memory + N_D + N_R`` enters through the trapezoid rule in time:

        Q_{n+1} = e^{-i w0 dt} (Q_n + lam sigma db_n) - dt/2 (e^{-i w0 dt} F_n + F_{n+1})

    The memory integral is a trapezoid sum over all past grid points.
    ``F_{n+1}`` needs ``Q_{n+1}`` through its endpoint term, which is taken
    from an explicit predictor step.

    Parameters
    ----------
    N_D, N_R : ComplexTrajectory or None
        Effective noises on the same grid; None means identically zero.
    drivers : DriverPaths or None
        Supplies the system increments ``db``; may be None when ``noise`` is
        False.
    """
    grids = [tr.grid for tr in (N_D, N_R) if tr is not None]
    if drivers is not None:
        grids.append(drivers.grid)
    if not grids:
        raise InvalidInputError("a grid is required (pass drivers or a noise path)")
    grid = grids[0]
    if any(g != grid for g in grids):
        raise InvalidInputError("noises and drivers must share one grid")
    if noise and drivers is None:
        raise InvalidInputError("drivers are required when noise is enabled")
    _warn_recurrence(spec, grid.T)

    n_steps = grid.n_steps
    dt = grid.dt
    force = np.zeros(n_steps + 1, dtype=complex)
    if N_D is not None:
        force += N_D.values
    if N_R is not None:
        force += N_R.values
    K = memory_kernel(spec, grid.times)
    # reversed kernel so that memory sums are plain dot products
    Krev = K[::-1].copy()
    rot = np.exp(-1j * params.omega0 * dt)
    amp = LAMBDA * params.sigma
    db = drivers.b_sys if noise else np.zeros(n_steps)

    Q = np.zeros(n_steps + 1, dtype=complex)
    Q[0] = Q0

    def memory(n: int, q_last: complex) -> complex:
        # trapezoid of int_0^{t_n} K(t_n - s) Q(s) ds with Q(t_n) = q_last
        if n == 0:
            return 0.0
        inner = Krev[n_steps - n + 1 : n_steps] @ Q[1:n] if n > 1 else 0.0
        return dt * (0.5 * K[n] * Q[0] + inner + 0.5 * K[0] * q_last)

    F_prev = memory(0, Q[0]) + force[0]
    for n in range(n_steps):
        base = rot * (Q[n] + amp * db[n])
        pred = base - dt * rot * F_prev
        F_pred = memory(n + 1, pred) + force[n + 1]
        Q[n + 1] = base - 0.5 * dt * (rot * F_prev + F_pred)
        F_prev = memory(n + 1, Q[n + 1]) + force[n + 1]
    if not np.all(np.isfinite(Q)):
        raise NumericalBlowupError("reduced simulation produced non-finite values")
    return ComplexTrajectory(grid, Q)
