"""Markovian limit: white-noise drivers, the damped Q equation and the linear SSE.

In the Ohmic limit the system coordinate obeys

    dQ = -(i w0 + a) Q dt - dB_D - dB_R + lam sigma db

with independent drivers ``E|dB_D|^2 = hbar eps dt``, ``E dB_D^2 = 0``,
``E dB_R^2 = hbar eps dt`` and ``E db^2 = dt``. In the Fock basis the wave
function obeys the linear stochastic Schroedinger equation

    dpsi = -(i + eps) / hbar H0 psi dt - L psi (dB_D + dB_R) + lam sigma L psi db.

Averaging ``psi psi^dagger`` reproduces a master equation whose jump term
depends on which drivers the bra and ket factors share. With the
dissipative driver shared and the other two averaged separately for bra
and ket, the jump coefficient is ``hbar eps``, which is the Lindblad
generator of :mod:`decolab.lindblad`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, CoupledPropagator
from .errors import ConfigError, InvalidInputError, NumericalBlowupError, StepSizeError
from .fock import LAMBDA, FockOperators, ModelParams, build_operators
from .grid import ComplexTrajectory, TimeGrid
from .lindblad import FockDensityMatrix
from .noise import Stream, rng_stream

__all__ = [
    "CONVENTIONS",
    "DEFAULT_CONVENTION",
    "MarkovDrivers",
    "make_markov_drivers",
    "simulate_markov_Q",
    "SSEState",
    "sse_step",
    "propagate_sse",
    "EnsembleSpec",
    "DensityEstimate",
    "assemble_density_matrix",
    "jump_coefficient",
    "finite_bath_two_level_density",
]

#: Sources shared between the bra and ket factors under each convention.
#: "D" dissipative driver, "R" recoil driver, "b" system Brownian motion.
CONVENTIONS: dict[str, frozenset[str]] = {
    "shared-D-inner-bR": frozenset({"D"}),
    "shared-DR-inner-b": frozenset({"D", "R"}),
    "all-shared": frozenset({"D", "R", "b"}),
    "all-independent": frozenset(),
}
DEFAULT_CONVENTION = "shared-D-inner-bR"

_SOURCE_STREAM = {"D": Stream.DISSIPATIVE, "R": Stream.RECOIL, "b": Stream.SYSTEM}


@dataclass(frozen=True)
class MarkovDrivers:
    """Increments of the three independent white-noise drivers.

    Attributes
    ----------
    grid : TimeGrid
    dB_D : ndarray of complex, shape (n_steps,)
    dB_R : ndarray of float, shape (n_steps,)
    db : ndarray of float, shape (n_steps,)
    seed, trajectory_index : int
    """

    grid: TimeGrid
    dB_D: np.ndarray
    dB_R: np.ndarray
    db: np.ndarray
    seed: int
    trajectory_index: int


def _source_increments(source: str, grid: TimeGrid, params: ModelParams, seed: int, index: int, *sub: int):
    rng = rng_stream(seed, index, _SOURCE_STREAM[source], *sub)
    n, dt = grid.n_steps, grid.dt
    if source == "D":
        xi = rng.standard_normal((n, 2))
        return (xi[:, 0] + 1j * xi[:, 1]) * np.sqrt(params.hbar * params.epsilon * dt / 2.0)
    if source == "R":
        return rng.standard_normal(n) * np.sqrt(params.hbar * params.epsilon * dt)
    return rng.standard_normal(n) * np.sqrt(dt)


def make_markov_drivers(grid: TimeGrid, params: ModelParams, seed: int, trajectory_index: int) -> MarkovDrivers:
    """Sample the three drivers from independent counter-based streams."""
    return MarkovDrivers(
        grid,
        _source_increments("D", grid, params, seed, trajectory_index),
        _source_increments("R", grid, params, seed, trajectory_index),
        _source_increments("b", grid, params, seed, trajectory_index),
        int(seed),
        int(trajectory_index),
    )


def simulate_markov_Q(
    Q0: complex,
    params: ModelParams,
    drivers: MarkovDrivers | None,
    grid: TimeGrid | None = None,
    stepper: str = "exact",
    noise: bool = True,
) -> ComplexTrajectory:
    """Integrate the damped complex Ornstein-Uhlenbeck equation for ``Q``.

    ``"exact"`` uses ``Q_{n+1} = exp(kappa dt) (Q_n + dW_n)`` with
    ``kappa = -(i w0 + a)`` and ``dW = -dB_D - dB_R + lam sigma db``;
    ``"euler"`` is Euler-Maruyama.
    """
    if drivers is not None:
        if grid is not None and grid != drivers.grid:
            raise InvalidInputError("grid does not match the drivers")
        grid = drivers.grid
    if grid is None:
        raise InvalidInputError("a grid or drivers are required")
    kappa = -(1j * params.omega0 + params.a)
    n = grid.n_steps
    if noise and drivers is not None:
        kick = -drivers.dB_D - drivers.dB_R + LAMBDA * params.sigma * drivers.db
    else:
        kick = np.zeros(n, dtype=complex)
    Q = np.empty(n + 1, dtype=complex)
    Q[0] = Q0
    if stepper == "exact":
        rot = np.exp(kappa * grid.dt)
        for i in range(n):
            Q[i + 1] = rot * (Q[i] + kick[i])
    elif stepper == "euler":
        for i in range(n):
            Q[i + 1] = Q[i] + kappa * Q[i] * grid.dt + kick[i]
    else:
        raise InvalidInputError(f"unknown stepper {stepper!r}")
    return ComplexTrajectory(grid, Q)


@dataclass(frozen=True)
class SSEState:
    """Fock amplitudes ``psi`` (shape ``(d,)`` or ``(batch, d)``) at ``time``."""

    psi: np.ndarray
    time: float = 0.0

    @property
    def norm2(self):
        return np.sum(np.abs(self.psi) ** 2, axis=-1)


def _check_stiffness(dt: float, ops: FockOperators, params: ModelParams) -> None:
    if dt * params.omega0 * ops.dim > 0.05 * (1 + 1e-12):
        raise StepSizeError(f"dt*omega0*dim = {dt * params.omega0 * ops.dim:.3g} exceeds 0.05")


def sse_step(
    state: SSEState,
    ops: FockOperators,
    params: ModelParams,
    dt: float,
    dB_D=0.0,
    dB_R=0.0,
    db=0.0,
    trajectory_index: int | None = None,
) -> SSEState:
    """One Euler-Maruyama step of the linear stochastic Schroedinger equation.

    Increments may be scalars or arrays broadcasting against the batch axis
    of ``state.psi``.
    """
    _check_stiffness(dt, ops, params)
    psi = np.asarray(state.psi, dtype=complex)
    if psi.shape[-1] != ops.dim:
        raise InvalidInputError(f"state has {psi.shape[-1]} levels, operators have {ops.dim}")
    energies = ops.energies
    gen = -(1j + params.epsilon) / params.hbar * energies
    Lpsi = psi @ ops.L.T
    kick = -np.asarray(dB_D) - np.asarray(dB_R) + LAMBDA * params.sigma * np.asarray(db)
    if np.ndim(kick) and psi.ndim == 2:
        kick = np.reshape(kick, (-1, 1))
    new = psi + gen * psi * dt + Lpsi * kick
    if not np.all(np.isfinite(new)):
        raise NumericalBlowupError(
            "stochastic Schroedinger step produced non-finite amplitudes",
            {"time": state.time, "trajectory_index": trajectory_index,
             "norm2_before": np.asarray(np.sum(np.abs(psi) ** 2, axis=-1)).tolist()},
        )
    return SSEState(new, state.time + dt)


def propagate_sse(
    psi0,
    ops: FockOperators,
    params: ModelParams,
    grid: TimeGrid,
    dB_D,
    dB_R,
    db,
    record: np.ndarray,
) -> np.ndarray:
    """Propagate a batch of trajectories and record amplitudes at grid indices.

    Parameters
    ----------
    psi0 : array_like, shape (d,)
    dB_D, dB_R, db : ndarray, shape (batch, n_steps) or None
        None means the driver is switched off.
    record : ndarray of int
        Grid indices to store.

    Returns
    -------
    ndarray, shape (batch, len(record), d)
    """
    _check_stiffness(grid.dt, ops, params)
    arrays = [x for x in (dB_D, dB_R, db) if x is not None]
    batch = arrays[0].shape[0] if arrays else 1
    kick = np.zeros((batch, grid.n_steps), dtype=complex)
    if dB_D is not None:
        kick -= dB_D
    if dB_R is not None:
        kick -= dB_R
    if db is not None:
        kick += LAMBDA * params.sigma * db
    psi = np.tile(np.asarray(psi0, dtype=complex), (batch, 1))
    drift = 1.0 - (1j + params.epsilon) / params.hbar * ops.energies * grid.dt
    LT = ops.L.T
    record = np.asarray(record, dtype=int)
    out = np.empty((batch, record.size, ops.dim), dtype=complex)
    pos = {int(r): i for i, r in enumerate(record)}
    if 0 in pos:
        out[:, pos[0]] = psi
    for n in range(grid.n_steps):
        psi = psi * drift + (psi @ LT) * kick[:, n : n + 1]
        if n + 1 in pos:
            out[:, pos[n + 1]] = psi
    if not np.all(np.isfinite(out)):
        bad = np.nonzero(~np.all(np.isfinite(out), axis=(1, 2)))[0]
        raise NumericalBlowupError("stochastic Schroedinger ensemble diverged", {"trajectories": bad[:10].tolist()})
    return out


@dataclass(frozen=True)
class EnsembleSpec:
    """Sizes and driver-sharing convention of a density-matrix ensemble.

    Attributes
    ----------
    n_outer : int
        Realizations of the shared drivers, >= 2.
    n_inner : int or None
        Realizations of the non-shared drivers averaged for each of bra and
        ket. None or 0 replaces the inner average by its exact value, which
        for a linear equation is the trajectory with those drivers set to 0.
    dim : int
    convention : str
        Key of :data:`CONVENTIONS`.
    """

    n_outer: int
    n_inner: int | None = None
    dim: int = 8
    convention: str = DEFAULT_CONVENTION

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"unknown sharing convention {self.convention!r}; choose from {sorted(CONVENTIONS)}")
        if self.n_outer < 2:
            raise InvalidInputError("n_outer must be >= 2")
        if self.n_inner is not None and self.n_inner < 0:
            raise InvalidInputError("n_inner must be >= 0")


@dataclass(frozen=True)
class DensityEstimate:
    """Ensemble density matrices at several times.

    Attributes
    ----------
    times : ndarray
    rho : ndarray, shape (n_times, d, d)
    stderr : ndarray, shape (n_times, d, d)
        Standard error of each entry (real and imaginary parts combined).
    trace_stderr : ndarray, shape (n_times,)
    """

    times: np.ndarray
    rho: np.ndarray
    stderr: np.ndarray
    trace_stderr: np.ndarray
    convention: str

    def at(self, i: int) -> FockDensityMatrix:
        return FockDensityMatrix(self.rho[i], float(self.times[i]))

    @property
    def traces(self) -> np.ndarray:
        return np.real(np.trace(self.rho, axis1=1, axis2=2))


def jump_coefficient(convention: str, params: ModelParams) -> float:
    """Coefficient of ``L rho L^dagger`` produced by a sharing convention."""
    shared = CONVENTIONS[convention]
    he = params.hbar * params.epsilon
    return (he if "D" in shared else 0.0) + (he if "R" in shared else 0.0) + (params.hbar if "b" in shared else 0.0)


def assemble_density_matrix(
    spec: EnsembleSpec,
    psi0,
    params: ModelParams,
    seed: int,
    times,
    dt: float,
    batch: int = 2048,
) -> DensityEstimate:
    """Estimate ``rho(t) = E_shared[phi_bra phi_ket^dagger]`` from the SSE.

    For every outer realization of the shared drivers, ``phi`` is the average
    of ``psi_t`` over the remaining drivers, taken separately for the bra and
    the ket. The outer sample ``(phi_bra phi_ket^H + phi_ket phi_bra^H) / 2`` is
    Hermitian, so the estimate is Hermitian by construction.

    Parameters
    ----------
    spec : EnsembleSpec
    psi0 : array_like, shape (dim,)
    params : ModelParams
    seed : int
    times : array_like
        Output times on the ``dt`` grid.
    dt : float
        SSE step; must satisfy ``dt omega0 dim <= 0.05``.
    batch : int
        Outer realizations propagated together.
    """
    ops = build_operators(spec.dim, params)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (spec.dim,):
        raise InvalidInputError(f"psi0 must have {spec.dim} entries")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    grid = TimeGrid.from_horizon(float(times.max()), dt)
    record = np.array([grid.index_of(t) for t in times])
    shared = CONVENTIONS[spec.convention]
    inner_sources = [s for s in ("D", "R", "b") if s not in shared]
    exact_inner = not spec.n_inner or not inner_sources

    n_rec, d = record.size, spec.dim
    acc = np.zeros((n_rec, d, d), dtype=complex)
    acc2_re = np.zeros((n_rec, d, d))
    acc2_im = np.zeros((n_rec, d, d))
    tr_sum = np.zeros(n_rec)
    tr_sq = np.zeros(n_rec)

    def draw(source, idx, *sub):
        return np.array([_source_increments(source, grid, params, seed, r, *sub) for r in idx])

    for b0 in range(0, spec.n_outer, batch):
        idx = np.arange(b0, min(spec.n_outer, b0 + batch))
        nb = idx.size
        shared_inc = {s: draw(s, idx) for s in ("D", "R", "b") if s in shared}
        if exact_inner:
            phi = propagate_sse(psi0, ops, params, grid, shared_inc.get("D"), shared_inc.get("R"),
                                shared_inc.get("b"), record)
            phi = np.broadcast_to(phi, (nb, n_rec, d))
            sample = phi[..., :, None] * phi[..., None, :].conj()
        else:
            sides = []
            for side in (1, 2):
                total = np.zeros((nb, n_rec, d), dtype=complex)
                for i in range(spec.n_inner):
                    inc = dict(shared_inc)
                    for s in inner_sources:
                        inc[s] = draw(s, idx, side, i)
                    total += propagate_sse(psi0, ops, params, grid, inc.get("D"), inc.get("R"), inc.get("b"), record)
                sides.append(total / spec.n_inner)
            pa, pb = sides
            cross = pa[..., :, None] * pb[..., None, :].conj()
            sample = 0.5 * (cross + np.conj(np.swapaxes(cross, -1, -2)))
        acc += sample.sum(axis=0)
        acc2_re += (sample.real**2).sum(axis=0)
        acc2_im += (sample.imag**2).sum(axis=0)
        tr = np.real(np.trace(sample, axis1=-2, axis2=-1))
        tr_sum += tr.sum(axis=0)
        tr_sq += (tr**2).sum(axis=0)

    n = spec.n_outer
    mean = acc / n
    var_re = np.maximum(acc2_re / n - mean.real**2, 0.0) * n / (n - 1)
    var_im = np.maximum(acc2_im / n - mean.imag**2, 0.0) * n / (n - 1)
    se = np.sqrt((var_re + var_im) / n)
    tr_mean = tr_sum / n
    tr_se = np.sqrt(np.maximum(tr_sq / n - tr_mean**2, 0.0) * n / (n - 1) / n)
    mean = 0.5 * (mean + np.conj(np.swapaxes(mean, -1, -2)))
    return DensityEstimate(times, mean, se, tr_se, spec.convention)


def finite_bath_two_level_density(
    spec: BathSpec, params: ModelParams, times, c0: complex, c1: complex
) -> np.ndarray:
    """Reduced density matrix of ``c0|0> + c1|1>`` coupled to a finite bath.

    The state's polynomial factor is affine, ``nu(Q) = c0 + c1 kappa Q`` with
    ``kappa = sqrt(2 w0 / hbar)``, so its average over all Brownian drivers
    only needs the mean of ``Q_t``:
    ``G(t) X + Z(t)``, where ``G`` is the noiseless response and
    ``Z = sum_k [exp(M t)]_{0k} x_k`` carries the random bath initial
    positions. Averaging the outer product over ``x_k`` then gives

        rho_00 = |c0|^2 + |c1|^2 kappa^2 E|Z|^2,  rho_01 = c0 conj(c1 G),  rho_11 = |c1|^2 |G|^2.

    Returns
    -------
    ndarray, shape (len(times), 2, 2)
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    prop = CoupledPropagator(spec, params)
    V, lam, S = prop.eigvecs, prop.eigvals, prop.scale
    phase = np.exp(-1j * np.multiply.outer(times, lam))
    # row 0 of exp(M t): (V[0] e^{-i lam t}) V^H scaled by S_k / S_0
    row = (phase * V[0][None, :]) @ V.conj().T * S[None, :]
    G = row[:, 0]
    var_x = params.hbar / (2.0 * spec.omegas)
    EZ2 = (np.abs(row[:, 1:]) ** 2) @ var_x
    kappa2 = 2.0 * params.omega0 / params.hbar
    rho = np.empty((times.size, 2, 2), dtype=complex)
    rho[:, 0, 0] = abs(c0) ** 2 + abs(c1) ** 2 * kappa2 * EZ2
    rho[:, 0, 1] = c0 * np.conj(c1 * G)
    rho[:, 1, 0] = np.conj(rho[:, 0, 1])
    rho[:, 1, 1] = abs(c1) ** 2 * np.abs(G) ** 2
    return rho
