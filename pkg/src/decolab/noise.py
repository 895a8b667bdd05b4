"""Reproducible sampling of Brownian drivers and the bath-induced noises.

Random numbers come from a Philox counter-based generator whose key is
derived from ``(seed, trajectory_index, stream, *sub)`` through
:class:`numpy.random.SeedSequence`. The counter position then plays the
role of the step index, so every sample is a pure function of those keys
and ensembles do not depend on evaluation order.

Two noises act on the system oscillator once the bath is eliminated:

* the deterministic noise ``N_D(s) = sum_k c_k x_k exp(-i w_k s)``, driven by
  random initial bath positions ``x_k``;
* the random noise ``N_R(s) = lam sigma sum_k c_k int_0^s exp(-i w_k (s - u)) db_k(u)``,
  driven by the bath Brownian motions,

with ``c_k = v_k sqrt(w_k / omega0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable

import numpy as np
from scipy import fft as sp_fft
from scipy.integrate import trapezoid

from .bath import BathSpec
from .errors import InvalidBathError, InvalidInputError
from .fock import LAMBDA, ModelParams
from .grid import ComplexTrajectory, TimeGrid

__all__ = [
    "Stream",
    "rng_stream",
    "DriverPaths",
    "BathInitials",
    "make_driver_paths",
    "sample_bath_initials",
    "deterministic_noise_path",
    "deterministic_noise_ensemble",
    "random_noise_path",
    "CovarianceEstimate",
    "estimate_covariance",
    "deterministic_noise_covariance",
    "random_noise_covariance",
    "averaged_closed_form",
    "integrated_covariance",
    "IntegratedEstimate",
    "estimate_integrated_covariance",
]


class Stream(IntEnum):
    """Identifiers of the independent random streams of one trajectory."""

    SYSTEM = 0
    BATH = 1
    BATH_INITIALS = 2
    DISSIPATIVE = 3
    RECOIL = 4
    AUXILIARY = 5


def rng_stream(seed: int, trajectory_index: int, stream: int, *sub: int) -> np.random.Generator:
    """Philox generator keyed by seed, trajectory, stream and optional sub-keys."""
    if trajectory_index < 0:
        raise InvalidInputError("trajectory_index must be non-negative")
    key = (int(trajectory_index), int(stream)) + tuple(int(s) for s in sub)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class DriverPaths:
    """Brownian increments of the system and of every bath mode.

    Attributes
    ----------
    grid : TimeGrid
    b_sys : ndarray, shape (n_steps,)
        Increments of the system Brownian motion.
    b_bath : ndarray, shape (n_modes, n_steps)
        Increments of the bath Brownian motions, one row per mode.
    seed, trajectory_index : int
    """

    grid: TimeGrid
    b_sys: np.ndarray
    b_bath: np.ndarray
    seed: int
    trajectory_index: int

    @property
    def n_modes(self) -> int:
        return self.b_bath.shape[0]


@dataclass(frozen=True)
class BathInitials:
    """Initial bath positions ``x_k`` (real)."""

    x: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.x.shape[0]


def make_driver_paths(grid: TimeGrid, n_modes: int, seed: int, trajectory_index: int) -> DriverPaths:
    """Sample independent ``N(0, dt)`` increments for system and bath.

    Parameters
    ----------
    grid : TimeGrid
    n_modes : int
        Number of bath modes (may be 0).
    seed, trajectory_index : int
        Keys of the counter-based generator.
    """
    if not isinstance(grid, TimeGrid):
        raise InvalidInputError("grid must be a TimeGrid")
    if n_modes < 0:
        raise InvalidInputError("n_modes must be non-negative")
    sdt = np.sqrt(grid.dt)
    b_sys = rng_stream(seed, trajectory_index, Stream.SYSTEM).standard_normal(grid.n_steps) * sdt
    b_bath = rng_stream(seed, trajectory_index, Stream.BATH).standard_normal((int(n_modes), grid.n_steps)) * sdt
    return DriverPaths(grid, b_sys, b_bath, int(seed), int(trajectory_index))


def sample_bath_initials(spec: BathSpec, params: ModelParams, seed: int, trajectory_index: int) -> BathInitials:
    """Draw independent ``x_k ~ N(0, hbar / (2 w_k))``."""
    if spec.n_modes < 1:
        raise InvalidBathError("bath needs at least one mode")
    if np.any(spec.omegas <= 0):
        raise InvalidBathError("all mode frequencies must be positive")
    z = rng_stream(seed, trajectory_index, Stream.BATH_INITIALS).standard_normal(spec.n_modes)
    return BathInitials(z * np.sqrt(params.hbar / (2.0 * spec.omegas)))


def _mode_weights(spec: BathSpec, params: ModelParams) -> np.ndarray:
    return spec.couplings * np.sqrt(spec.omegas / params.omega0)


def deterministic_noise_path(
    spec: BathSpec, initials: BathInitials, params: ModelParams, grid: TimeGrid
) -> ComplexTrajectory:
    """Evaluate ``N_D`` on every grid time."""
    x = np.asarray(initials.x, dtype=float)
    if x.shape != (spec.n_modes,):
        raise InvalidInputError(f"expected {spec.n_modes} initial values, got shape {x.shape}")
    phases = np.exp(-1j * np.outer(grid.times, spec.omegas))
    return ComplexTrajectory(grid, phases @ (_mode_weights(spec, params) * x))


def deterministic_noise_ensemble(
    spec: BathSpec, params: ModelParams, grid: TimeGrid, seed: int, indices
) -> list[ComplexTrajectory]:
    """``N_D`` paths for several trajectory indices, sharing one phase table.

    Equivalent to calling :func:`sample_bath_initials` and
    :func:`deterministic_noise_path` for every index.
    """
    x = np.array([sample_bath_initials(spec, params, seed, int(i)).x for i in indices])
    phases = np.exp(-1j * np.outer(grid.times, spec.omegas))
    vals = (x * _mode_weights(spec, params)) @ phases.T
    return [ComplexTrajectory(grid, v) for v in vals]


def random_noise_path(
    spec: BathSpec, drivers: DriverPaths, params: ModelParams, per_mode: bool = False, rule: str = "left"
) -> ComplexTrajectory:
    """Evaluate ``N_R`` as a Riemann sum over the driver increments.

    The per-mode integrals follow the recursion
    ``I_{n+1} = exp(-i w dt) I_n + exp(-i w c dt) db_n``. With ``rule="left"``
    (``c = 1``) this is the left-point (Ito) sum, which matches the coupled
    bath solver path by path. The integrand is deterministic, so every rule
    converges to the same integral; ``rule="midpoint"`` (``c = 1/2``) removes
    the first-order ``w dt`` bias of the two-time covariances and is the
    better choice for estimating them.

    Parameters
    ----------
    per_mode : bool
        If True return the individual mode contributions as columns of an
        ``(n_steps + 1, n_modes)`` array instead of their sum.
    rule : {"left", "midpoint"}
    """
    if drivers.n_modes != spec.n_modes:
        raise InvalidInputError(f"drivers carry {drivers.n_modes} bath streams, bath has {spec.n_modes} modes")
    if rule == "left":
        frac = 1.0
    elif rule == "midpoint":
        frac = 0.5
    else:
        raise InvalidInputError(f"unknown rule {rule!r}")
    grid = drivers.grid
    rot = np.exp(-1j * spec.omegas * grid.dt)
    kick = np.exp(-1j * spec.omegas * grid.dt * frac)
    integ = np.zeros((grid.n_steps + 1, spec.n_modes), dtype=complex)
    cur = np.zeros(spec.n_modes, dtype=complex)
    for n in range(grid.n_steps):
        cur = rot * cur + kick * drivers.b_bath[:, n]
        integ[n + 1] = cur
    scale = LAMBDA * params.sigma * _mode_weights(spec, params)
    if per_mode:
        return ComplexTrajectory(grid, integ * scale)
    return ComplexTrajectory(grid, integ @ scale)


# ---------------------------------------------------------------------------
# covariance estimation


@dataclass(frozen=True)
class CovarianceEstimate:
    """Lag-indexed covariance estimate.

    Attributes
    ----------
    lags : ndarray
        Lag times ``l dt``.
    values : ndarray of complex
        Estimated ``E[f(Z(s)) Z(s + lag)]`` averaged over the chosen ``s``.
    stderr_re, stderr_im : ndarray
        Standard errors of the real and imaginary parts, from the spread
        across realizations.
    n_samples : int
    """

    lags: np.ndarray
    values: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n_samples: int
    per_sample: np.ndarray | None = None

    @property
    def stderr(self) -> np.ndarray:
        return np.hypot(self.stderr_re, self.stderr_im)


def _lagged_products(values: np.ndarray, start: np.ndarray, max_lag: int, conjugate_first: bool) -> np.ndarray:
    """``sum_{s in start} f(Z(s)) Z(s + l)`` for l = 0..max_lag, summed over columns."""
    z = np.ascontiguousarray(np.atleast_2d(values.T))  # (components, time)
    n = z.shape[1]
    first = np.zeros_like(z)
    first[:, start] = z[:, start].conj() if conjugate_first else z[:, start]
    # zero padding to nfft >= 2n keeps the circular correlation from wrapping
    nfft = sp_fft.next_fast_len(2 * n)
    spec = np.conj(sp_fft.fft(first.conj(), nfft, axis=1)) * sp_fft.fft(z, nfft, axis=1)
    return sp_fft.ifft(spec.sum(axis=0))[: max_lag + 1]


def estimate_covariance(
    ensemble: Iterable[ComplexTrajectory],
    conjugate_first: bool,
    max_lag: int,
    s_range: tuple[float, float] | None = None,
    keep_samples: bool = False,
) -> CovarianceEstimate:
    """Monte Carlo estimate of a lag covariance with standard errors.

    For each realization the statistic ``mean_s f(Z(s)) Z(s + l dt)`` is formed,
    where ``f`` is complex conjugation if ``conjugate_first`` else identity,
    and ``s`` runs over the grid points in ``s_range`` (default: all points
    that keep ``s + max_lag dt`` on the grid). The estimate and its standard
    error come from the mean and spread of this statistic across realizations.

    Trajectories whose values are two-dimensional are treated as independent
    components: the products are formed per column and summed, which drops
    the zero-mean cross terms between components.

    Parameters
    ----------
    ensemble : iterable of ComplexTrajectory
        At least two realizations on a common grid; consumed lazily.
    conjugate_first : bool
    max_lag : int
        Largest lag in grid steps.
    s_range : (float, float), optional
        Inclusive range of base times ``s``.
    keep_samples : bool
        Store the per-realization statistics on the result.
    """
    grid = None
    samples = []
    for traj in ensemble:
        if grid is None:
            grid = traj.grid
            if max_lag < 0 or max_lag > grid.n_steps:
                raise InvalidInputError("max_lag must lie inside the grid")
            start = _base_indices(grid, max_lag, s_range)
        elif traj.grid != grid:
            raise InvalidInputError("all trajectories must share one grid")
        samples.append(_lagged_products(traj.values, start, max_lag, conjugate_first) / start.size)
    if len(samples) < 2:
        raise InvalidInputError("need at least two trajectories")
    arr = np.array(samples)
    n = arr.shape[0]
    mean = arr.mean(axis=0)
    se_re = arr.real.std(axis=0, ddof=1) / np.sqrt(n)
    se_im = arr.imag.std(axis=0, ddof=1) / np.sqrt(n)
    lags = np.arange(max_lag + 1) * grid.dt
    return CovarianceEstimate(lags, mean, se_re, se_im, n, arr if keep_samples else None)


def _base_indices(grid: TimeGrid, max_lag: int, s_range) -> np.ndarray:
    t = grid.times
    last = grid.n_steps - max_lag
    if s_range is None:
        start = np.arange(0, last + 1)
    else:
        lo, hi = s_range
        start = np.nonzero((t >= lo - 1e-12) & (t <= hi + 1e-12))[0]
        start = start[start <= last]
    if start.size == 0:
        raise InvalidInputError("no base times left in s_range for the requested lag")
    return start


@dataclass(frozen=True)
class IntegratedEstimate:
    """Lag-integrated covariance ``int_{-U}^{U} C(u) du`` with its standard error."""

    value: complex
    stderr_re: float
    stderr_im: float
    n_samples: int
    window: float


def estimate_integrated_covariance(
    ensemble: Iterable[ComplexTrajectory],
    conjugate_first: bool,
    window: float,
    s_range: tuple[float, float] | None = None,
) -> IntegratedEstimate:
    """Estimate the covariance integrated over lags ``[-U, U]`` directly.

    Per realization this forms ``2 mean_s f(Z(s)) int_0^U Z(s + u) du`` with
    the lag integral done by the trapezoid rule through cumulative sums, so
    the cost is linear in the path length. As in :func:`estimate_covariance`,
    two-dimensional trajectories are treated as independent components.
    For a conjugated covariance the negative lags give the complex conjugate,
    so only the real part is meaningful; for a plain covariance the lag
    dependence is symmetric and the full complex value is returned.
    """
    samples = []
    grid = None
    for traj in ensemble:
        if grid is None:
            grid = traj.grid
            L = int(round(window / grid.dt))
            if L < 1 or abs(L * grid.dt - window) > 1e-9 * window:
                raise InvalidInputError("window must be a positive multiple of dt")
            start = _base_indices(grid, L, s_range)
        elif traj.grid != grid:
            raise InvalidInputError("all trajectories must share one grid")
        z = np.asarray(traj.values)
        if z.ndim == 1:
            z = z[:, None]
        csum = np.concatenate((np.zeros((1, z.shape[1]), dtype=complex), np.cumsum(z, axis=0)))
        box = csum[start + L + 1] - csum[start]  # sum of Z(s .. s+L)
        trap = grid.dt * (box - 0.5 * (z[start] + z[start + L]))
        first = z[start].conj() if conjugate_first else z[start]
        stat = 2.0 * np.sum(first * trap) / start.size
        samples.append(stat.real if conjugate_first else stat)
    if len(samples) < 2:
        raise InvalidInputError("need at least two trajectories")
    arr = np.array(samples, dtype=complex)
    n = arr.size
    return IntegratedEstimate(
        complex(arr.mean()),
        float(arr.real.std(ddof=1) / np.sqrt(n)),
        float(arr.imag.std(ddof=1) / np.sqrt(n)),
        n,
        float(window),
    )


# ---------------------------------------------------------------------------
# closed forms for a finite bath


def deterministic_noise_covariance(spec: BathSpec, params: ModelParams, s, t, conjugate_first: bool = True):
    """Exact ``E[conj(N_D(s)) N_D(t)]`` (or ``E[N_D(s) N_D(t)]``)."""
    s = np.asarray(s, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    v2 = spec.couplings**2
    w = spec.omegas
    if conjugate_first:
        return params.hbar / (2 * params.omega0) * np.sum(v2 * np.exp(-1j * w * (t - s)), axis=-1)
    return params.hbar / (2 * params.omega0) * np.sum(v2 * np.exp(-1j * w * (t + s)), axis=-1)


def random_noise_covariance(spec: BathSpec, params: ModelParams, s, t, conjugate_first: bool = True):
    """Exact covariance of the Ito-integral noise ``N_R`` for a finite bath.

    Conjugated: ``hbar min(s,t) / omega0 sum_k w_k v_k^2 exp(-i w_k (t - s))``.
    Plain: ``sigma^2 sum_k c_k^2 exp(-i w_k (s + t)) (exp(2 i w_k m) - 1) / (2 w_k)``
    with ``m = min(s, t)``.
    """
    s = np.asarray(s, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    w = spec.omegas
    c2 = spec.couplings**2 * w / params.omega0
    m = np.minimum(s, t)
    if conjugate_first:
        return params.sigma**2 * np.sum(c2 * m * np.exp(-1j * w * (t - s)), axis=-1)
    return params.sigma**2 * np.sum(c2 * np.exp(-1j * w * (s + t)) * np.expm1(2j * w * m) / (2 * w), axis=-1)


def averaged_closed_form(closed_form, grid: TimeGrid, max_lag: int, s_range=None, **kwargs) -> np.ndarray:
    """Average a two-time closed form over the same base times the estimator uses."""
    t = grid.times
    start = _base_indices(grid, max_lag, s_range)
    s = t[start]
    out = np.empty(max_lag + 1, dtype=complex)
    for lag in range(max_lag + 1):
        out[lag] = np.mean(closed_form(s=s, t=s + lag * grid.dt, **kwargs))
    return out


def integrated_covariance(cov: CovarianceEstimate | np.ndarray, dt: float | None = None, hermitian: bool = True):
    """Integrate a one-sided lag covariance over the symmetric window ``[-U, U]``.

    For a conjugated (Hermitian) covariance the negative lags contribute the
    complex conjugate, so the integral is ``2 Re int_0^U C``. For a plain
    covariance, which is symmetric in the lag, it is ``2 int_0^U C``.

    Returns
    -------
    value : complex or float
    stderr : float or None
        Standard error from the per-realization integrals when available.
    """
    if isinstance(cov, CovarianceEstimate):
        lags = cov.lags
        vals = cov.values
        samples = cov.per_sample
    else:
        vals = np.asarray(cov)
        lags = np.arange(vals.shape[-1]) * dt
        samples = None

    def _integ(v):
        out = 2.0 * trapezoid(v, lags, axis=-1)
        return out.real if hermitian else out

    value = _integ(vals)
    stderr = None
    if samples is not None:
        per = _integ(samples)
        stderr = float(np.std(np.real(per), ddof=1) / np.sqrt(per.shape[0]))
    return value, stderr
