"""Complex linear SDEs and the diffusion representation of the free oscillator.

For the oscillator of frequency ``omega`` with ground state ``chi_0``, the
evolved state of ``chi_0 * phi`` is ``chi_t(x) E[phi(q_t(x))]`` where

    dq = -i omega q dt + lam sigma db,   q_0 = x,

``lam = (1 + i) / sqrt(2)`` and ``chi_t = chi_0 exp(-i omega t / 2)``. The
solution is ``q_t = exp(-i omega t) x + lam sigma int_0^t exp(-i omega (t - u)) db(u)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import expm

from .errors import InvalidInputError, NumericalBlowupError, StepSizeError
from .fock import LAMBDA, ModelParams
from .grid import ComplexTrajectory, TimeGrid
from .noise import DriverPaths, Stream, rng_stream

__all__ = [
    "GH_NODES",
    "LinearSDE",
    "MCEstimate",
    "integrate_linear_sde",
    "free_oscillator_solution",
    "system_increments",
    "oscillator_endpoints",
    "stochastic_expectation",
    "correlation_function",
    "representation_norm",
    "ground_state_quadrature",
]

#: Gauss-Hermite nodes used for integrals against ``|chi_0|^2``.
GH_NODES = 64

PolyLike = Union[Polynomial, Sequence[complex], Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class LinearSDE:
    """``dz = A z dt + B db`` with complex ``A`` (d x d) and ``B`` (d x m)."""

    drift: np.ndarray
    noise_map: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.drift, dtype=complex))
        B = np.asarray(self.noise_map, dtype=complex)
        if B.ndim == 1:
            B = B[:, None]
        if A.shape[0] != A.shape[1] or B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise InvalidInputError(f"inconsistent shapes: drift {A.shape}, noise map {B.shape}")
        object.__setattr__(self, "drift", A)
        object.__setattr__(self, "noise_map", B)

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def n_drivers(self) -> int:
        return self.noise_map.shape[1]


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with standard errors.

    Attributes
    ----------
    value : complex or ndarray
    stderr_re, stderr_im : float or ndarray
        Standard errors of the real and imaginary parts.
    n_samples : int
    heavy_tail : bool or ndarray
        True where a grouped jackknife finds the variance estimate itself
        unreliable (relative error above 0.5), i.e. the standard error
        should not be trusted.
    """

    value: complex | np.ndarray
    stderr_re: float | np.ndarray
    stderr_im: float | np.ndarray
    n_samples: int
    heavy_tail: bool | np.ndarray = False

    @property
    def stderr(self):
        """Combined standard error ``sqrt(se_re^2 + se_im^2)``."""
        return np.hypot(self.stderr_re, self.stderr_im)


def _driver_matrix(drivers, n_drivers: int) -> tuple[TimeGrid, np.ndarray]:
    if isinstance(drivers, DriverPaths):
        inc = np.vstack((drivers.b_sys[None, :], drivers.b_bath))
        grid = drivers.grid
    else:
        grid, inc = drivers
        inc = np.atleast_2d(np.asarray(inc, dtype=float))
    if inc.shape[0] < n_drivers:
        raise InvalidInputError(f"system needs {n_drivers} drivers, got {inc.shape[0]}")
    if inc.shape[1] != grid.n_steps:
        raise InvalidInputError("driver increments do not match the grid")
    return grid, inc[:n_drivers]


def integrate_linear_sde(sys: LinearSDE, z0, drivers, stepper: str = "exact") -> ComplexTrajectory:
    """Integrate ``dz = A z dt + B db`` on the driver grid (Ito).

    Parameters
    ----------
    sys : LinearSDE
    z0 : array_like
        Initial state of length ``sys.dim``.
    drivers : DriverPaths or (TimeGrid, ndarray)
        Driver increments; from a :class:`DriverPaths` the system stream comes
        first, followed by the bath streams.
    stepper : {"exact", "euler"}
        ``"exact"``: ``z_{n+1} = exp(A dt) (z_n + B db_n)``, which carries the
        left-point noise increment through the exact flow and matches Ito
        Riemann sums of the closed-form solution. ``"euler"``:
        Euler-Maruyama, requires ``dt ||A||_2 <= 0.1``.

    Returns
    -------
    ComplexTrajectory
        Values of shape ``(n_steps + 1, dim)``.
    """
    grid, inc = _driver_matrix(drivers, sys.n_drivers)
    z = np.asarray(z0, dtype=complex).reshape(sys.dim)
    A, B = sys.drift, sys.noise_map
    dt = grid.dt
    out = np.empty((grid.n_steps + 1, sys.dim), dtype=complex)
    out[0] = z
    kicks = (B @ inc).T
    if stepper == "exact":
        E = expm(A * dt)
        for n in range(grid.n_steps):
            z = E @ (z + kicks[n])
            out[n + 1] = z
    elif stepper == "euler":
        norm = np.linalg.norm(A, 2)
        if dt * norm > 0.1:
            raise StepSizeError(f"euler stepping needs dt*||A|| <= 0.1, got {dt * norm:.3g}")
        for n in range(grid.n_steps):
            z = z + (A @ z) * dt + kicks[n]
            out[n + 1] = z
    else:
        raise InvalidInputError(f"unknown stepper {stepper!r}")
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("linear SDE produced non-finite values", {"stepper": stepper})
    return ComplexTrajectory(grid, out)


def free_oscillator_solution(
    omega: float, x: float, drivers, params: ModelParams, noise: bool = True
) -> ComplexTrajectory:
    """Closed-form path ``exp(-i w s) x + lam sigma sum_{u_m < s} exp(-i w (s - u_m)) db_m``.

    The stochastic integral is the left-point sum over the system driver.
    """
    if isinstance(drivers, DriverPaths):
        grid, db = drivers.grid, drivers.b_sys
    else:
        grid, db = drivers
        db = np.asarray(db, dtype=float).reshape(-1)
    t = grid.times
    base = np.exp(-1j * omega * t) * x
    if not noise:
        return ComplexTrajectory(grid, base)
    tau = t[:-1]
    partial = np.concatenate(([0.0], np.cumsum(np.exp(1j * omega * tau) * db)))
    return ComplexTrajectory(grid, base + LAMBDA * params.sigma * np.exp(-1j * omega * t) * partial)


# ---------------------------------------------------------------------------
# Monte Carlo over the diffusion representation


def system_increments(grid: TimeGrid, seed: int, trajectory_index: int) -> np.ndarray:
    """System Brownian increments; identical to ``make_driver_paths(...).b_sys``."""
    return rng_stream(seed, trajectory_index, Stream.SYSTEM).standard_normal(grid.n_steps) * np.sqrt(grid.dt)


def _as_poly(phi: PolyLike, max_degree: int = 8) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(phi, Polynomial):
        coef = phi.coef
    elif callable(phi):
        return phi
    else:
        coef = np.atleast_1d(np.asarray(phi, dtype=complex))
    if coef.size - 1 > max_degree:
        raise InvalidInputError(f"polynomial degree {coef.size - 1} exceeds {max_degree}")
    coef = np.asarray(coef, dtype=complex)
    return lambda z: np.polynomial.polynomial.polyval(z, coef)


def oscillator_endpoints(
    times, omega: float, params: ModelParams, n_traj: int, seed: int, dt: float = 1e-3, first_index: int = 0
) -> np.ndarray:
    """Noise part ``lam sigma int_0^t exp(-i w (t - u)) db(u)`` at each time.

    Drivers are drawn on a grid of step ``dt`` reaching the largest time;
    every requested time must be a grid point.

    Returns
    -------
    ndarray, shape (n_traj, len(times))
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise InvalidInputError("times must be non-negative")
    grid = TimeGrid.from_horizon(float(times.max()), dt) if times.max() > 0 else TimeGrid(dt, 0)
    idx = np.array([grid.index_of(t) for t in times])
    tau = grid.times[:-1]
    # weights[j, m] = exp(-i w (t_j - u_m)) for u_m < t_j
    weights = np.exp(-1j * omega * (times[:, None] - tau[None, :]))
    weights[np.arange(grid.n_steps)[None, :] >= idx[:, None]] = 0.0
    out = np.empty((n_traj, times.size), dtype=complex)
    batch = 512
    for b0 in range(0, n_traj, batch):
        b1 = min(n_traj, b0 + batch)
        db = np.array([system_increments(grid, seed, first_index + r) for r in range(b0, b1)])
        out[b0:b1] = db.reshape(b1 - b0, grid.n_steps) @ weights.T
    return LAMBDA * params.sigma * out


def _summarize(samples: np.ndarray, n_groups: int = 20) -> MCEstimate:
    """Mean, standard errors and a grouped-jackknife heavy-tail flag over axis 0."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        zero = np.zeros(np.shape(mean))
        return MCEstimate(mean, zero, zero, n, np.zeros(np.shape(mean), bool))
    se_re = samples.real.std(axis=0, ddof=1) / np.sqrt(n)
    se_im = samples.imag.std(axis=0, ddof=1) / np.sqrt(n)
    g = min(n_groups, n)
    dev2 = np.abs(samples - mean) ** 2
    groups = np.array_split(dev2, g, axis=0)
    totals = np.array([grp.sum(axis=0) for grp in groups])
    counts = np.array([grp.shape[0] for grp in groups]).reshape((-1,) + (1,) * (dev2.ndim - 1))
    var_all = dev2.sum(axis=0) / n
    loo = (dev2.sum(axis=0) - totals) / (n - counts)
    jk_se = np.sqrt((g - 1) / g * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(var_all > 0, jk_se / var_all, 0.0)
    heavy = rel > 0.5
    if np.ndim(mean) == 0:
        return MCEstimate(complex(mean), float(se_re), float(se_im), n, bool(heavy))
    return MCEstimate(mean, se_re, se_im, n, heavy)


def stochastic_expectation(
    phi: PolyLike,
    x,
    t,
    omega: float,
    params: ModelParams,
    n_traj: int,
    seed: int = 0,
    dt: float = 1e-3,
) -> MCEstimate:
    """Monte Carlo estimate of ``E[phi(q_t(x))]``.

    Parameters
    ----------
    phi : Polynomial, coefficient sequence (ascending) or callable
        Polynomials are limited to degree 8.
    x : float or array_like
        Starting points; the same trajectories are used for every point.
    t : float or array_like
        Evaluation times on the ``dt`` grid.
    omega : float
    params : ModelParams
    n_traj : int
    seed : int
    dt : float
        Step of the driver grid for the left-point stochastic integral.

    Returns
    -------
    MCEstimate
        ``value`` has shape ``(len(t), len(x))`` with scalar inputs squeezed.
        Multiplying by ``chi_0(x) exp(-i omega t / 2)`` gives the evolved
        wavefunction.
    """
    f = _as_poly(phi)
    if n_traj < 1:
        raise InvalidInputError("n_traj must be positive")
    scalar_t = np.ndim(t) == 0
    scalar_x = np.ndim(x) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    xs = np.atleast_1d(np.asarray(x, dtype=complex))
    noise = oscillator_endpoints(times, omega, params, n_traj, seed, dt)
    q = np.exp(-1j * omega * times)[None, :, None] * xs[None, None, :] + noise[:, :, None]
    samples = np.asarray(f(q), dtype=complex) * np.ones_like(q)
    est = _summarize(samples)
    if scalar_t or scalar_x:
        sl = (0 if scalar_t else slice(None), 0 if scalar_x else slice(None))
        pick = lambda a: a[sl] if np.ndim(a) else a  # noqa: E731
        val = pick(est.value)
        if np.ndim(val) == 0:
            return MCEstimate(complex(val), float(pick(est.stderr_re)), float(pick(est.stderr_im)),
                              est.n_samples, bool(pick(est.heavy_tail)))
        return MCEstimate(val, pick(est.stderr_re), pick(est.stderr_im), est.n_samples, pick(est.heavy_tail))
    return est


def ground_state_quadrature(omega: float, params: ModelParams, n_nodes: int = GH_NODES):
    """Nodes and weights integrating against the normalized density ``|chi_0(x)|^2``."""
    y, w = np.polynomial.hermite.hermgauss(n_nodes)
    return y * np.sqrt(params.hbar / omega), w / np.sqrt(np.pi)


def correlation_function(
    F: PolyLike,
    G: PolyLike,
    t: float,
    omega: float,
    params: ModelParams,
    n_traj: int,
    seed: int = 0,
    dt: float = 1e-3,
    n_nodes: int = GH_NODES,
) -> MCEstimate:
    """Estimate ``E[int dx |chi_0(x)|^2 F(x) G(q_t(x))]``.

    The ``x`` integral uses Gauss-Hermite quadrature matched to the ground
    state density; the expectation uses ``n_traj`` trajectories shared by all
    nodes, so the standard error is exact Monte Carlo error.
    """
    f, g = _as_poly(F), _as_poly(G)
    nodes, weights = ground_state_quadrature(omega, params, n_nodes)
    noise = oscillator_endpoints([t], omega, params, n_traj, seed, dt)[:, 0]
    q = np.exp(-1j * omega * t) * nodes[None, :] + noise[:, None]
    gq = np.asarray(g(q), dtype=complex) * np.ones_like(q)
    fx = np.asarray(f(nodes.astype(complex)), dtype=complex) * np.ones_like(nodes, dtype=complex)
    samples = gq @ (weights * fx)
    return _summarize(samples)


def representation_norm(
    phi: PolyLike,
    t: float,
    omega: float,
    params: ModelParams,
    n_traj: int,
    seed: int = 0,
    dt: float = 1e-3,
    n_nodes: int = GH_NODES,
    n_groups: int = 20,
) -> tuple[float, float, float]:
    """Squared norm of the represented state at time ``t``.

    Computes ``int |chi_0|^2 |E phi(q_t(x))|^2 dx`` without the positive bias
    of squaring a noisy mean: the trajectories are split into two halves and
    the product of their means is used. The standard error comes from a
    grouped jackknife.

    Returns
    -------
    norm_t : float
    stderr : float
    norm_0 : float
        Squared norm of ``chi_0 phi`` by quadrature.
    """
    f = _as_poly(phi)
    nodes, weights = ground_state_quadrature(omega, params, n_nodes)
    noise = oscillator_endpoints([t], omega, params, n_traj, seed, dt)[:, 0]
    vals = np.asarray(f(np.exp(-1j * omega * t) * nodes[None, :] + noise[:, None]), dtype=complex)
    half = n_traj // 2
    A, B = vals[:half], vals[half : 2 * half]

    def stat(a, b):
        return float(np.real(np.sum(weights * np.conj(a.mean(axis=0)) * b.mean(axis=0))))

    est = stat(A, B)
    ga = np.array_split(np.arange(half), n_groups)
    loo = []
    for grp in ga:
        keep = np.setdiff1d(np.arange(half), grp)
        loo.append(stat(A[keep], B[keep]))
    loo = np.array(loo)
    g = len(ga)
    se = float(np.sqrt((g - 1) / g * np.sum((loo - loo.mean()) ** 2)))
    norm0 = float(np.sum(weights * np.abs(f(nodes.astype(complex))) ** 2))
    return est, se, norm0
