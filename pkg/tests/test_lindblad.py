import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decolab.errors import IntegrationFailure, InvalidInputError, StepSizeError
from decolab.fock import ModelParams, build_operators
from decolab.lindblad import (
    FockDensityMatrix,
    analytic_offdiagonal_decay,
    asymptotic_decay_rate,
    energy_rep_rhs,
    fit_decay_rate,
    integrate_master,
    lindblad_rhs,
    localization_rates,
    representation_coherence,
)
from oracles import amplitude_damping_exact, lindblad_exact, lindblad_superoperator


def random_state(dim, seed, rank=None):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((dim, rank or dim)) + 1j * rng.standard_normal((dim, rank or dim))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def test_density_matrix_container():
    psi = np.array([0.6, 0.8j])
    rho = FockDensityMatrix.pure(psi, time=1.5)
    assert rho.dim == 2
    assert rho.trace == pytest.approx(1.0)
    assert rho.hermiticity_error == 0.0
    assert rho.min_eigenvalue == pytest.approx(0.0, abs=1e-14)
    assert rho.time == 1.5
    with pytest.raises(InvalidInputError):
        FockDensityMatrix(np.zeros((2, 3)))


def test_rhs_matches_superoperator():
    params = ModelParams(hbar=0.8, omega0=1.3, a=0.3)
    rho = random_state(6, 0)
    ops = build_operators(6, params)
    gen = lindblad_superoperator(6, params.hbar, params.omega0, params.epsilon)
    ref = (gen @ rho.reshape(-1)).reshape(6, 6)
    np.testing.assert_allclose(lindblad_rhs(rho, ops, params), ref, atol=1e-13)
    with pytest.raises(InvalidInputError):
        lindblad_rhs(np.eye(5), ops, params)


@settings(max_examples=30, deadline=None)
@given(dim=st.integers(2, 12), seed=st.integers(0, 10**6), hbar=st.floats(0.3, 3.0),
       omega0=st.floats(0.2, 4.0), a=st.floats(0.0, 1.0))
def test_property_full_generator_equals_energy_recursion(dim, seed, hbar, omega0, a):
    params = ModelParams(hbar=hbar, omega0=omega0, a=a)
    rho = random_state(dim, seed)
    ops = build_operators(dim, params)
    lhs = lindblad_rhs(rho, ops, params)
    rhs = energy_rep_rhs(rho, params)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.max(np.abs(lhs))))
    # the generator preserves trace and hermiticity
    assert abs(np.trace(lhs)) < 1e-12 * max(1.0, np.max(np.abs(lhs)) * dim)
    np.testing.assert_allclose(lhs, lhs.conj().T, atol=1e-12 * max(1.0, np.max(np.abs(lhs))))


@pytest.mark.parametrize("generator", ["full", "energy-rep"])
def test_integration_matches_exact_solutions(generator):
    params = ModelParams(omega0=1.2, a=0.3)
    rho0 = random_state(6, 4)
    traj = integrate_master(rho0, params, 2.0, 0.005, generator=generator, sample_every=100)
    np.testing.assert_allclose(traj.times, [0.0, 0.5, 1.0, 1.5, 2.0])
    for t, rho in zip(traj.times, traj.states):
        np.testing.assert_allclose(rho, lindblad_exact(rho0, t, params.hbar, params.omega0, params.epsilon),
                                   atol=1e-8)
        np.testing.assert_allclose(rho, amplitude_damping_exact(rho0, t, params.epsilon, params.omega0), atol=1e-8)
    assert traj.max_trace_drift < 1e-12
    assert traj.min_eigenvalue > -1e-12
    assert traj.at(2).time == pytest.approx(1.0)
    assert traj.element(0, 1).shape == (5,)


def test_batched_integration_equals_single():
    params = ModelParams()
    stack = np.array([random_state(5, s) for s in range(3)])
    batched = integrate_master(stack, params, 1.0, 0.01, sample_every=50)
    assert batched.states.shape == (3, 3, 5, 5)
    for i in range(3):
        single = integrate_master(stack[i], params, 1.0, 0.01, sample_every=50)
        np.testing.assert_allclose(batched.states[:, i], single.states, atol=1e-15)


def test_step_rounding_and_observer():
    seen = []
    traj = integrate_master(random_state(4, 1), ModelParams(), 0.04, 0.012,
                            observer=lambda t, r: seen.append(t))
    # 0.04 / 0.012 rounds up to 4 steps of 0.01
    np.testing.assert_allclose(traj.times, [0, 0.01, 0.02, 0.03, 0.04])
    np.testing.assert_allclose(seen, traj.times)
    empty = integrate_master(random_state(4, 1), ModelParams(), 0.0, 0.01)
    assert empty.states.shape == (1, 4, 4)


def test_integration_guards():
    params = ModelParams()
    with pytest.raises(StepSizeError):
        integrate_master(random_state(10, 0), params, 1.0, 0.01)
    with pytest.raises(InvalidInputError):
        integrate_master(random_state(4, 0), params, 1.0, 0.0)
    with pytest.raises(InvalidInputError):
        integrate_master(np.zeros((3, 4)), params, 1.0, 0.01)
    with pytest.raises(InvalidInputError):
        integrate_master(random_state(4, 0), params, 1.0, 0.01, generator="exact")


def test_monitor_flags_non_hermitian_input():
    params = ModelParams()
    bad = random_state(4, 0)
    bad[0, 1] += 0.1
    with pytest.raises(IntegrationFailure) as info:
        integrate_master(bad, params, 0.1, 0.01)
    assert "hermiticity" in str(info.value)
    # without monitoring the same input integrates
    traj = integrate_master(bad, params, 0.1, 0.01, monitor=False)
    assert np.isnan(traj.min_eigenvalue)


def test_monitor_flags_negative_eigenvalue():
    params = ModelParams()
    # Hermitian, unit trace, indefinite: the generator keeps it indefinite
    rho = np.diag([1.2, -0.2, 0.0, 0.0]).astype(complex)
    with pytest.raises(IntegrationFailure):
        integrate_master(rho, params, 0.1, 0.01, check_positivity=True)
    # by default positivity is only checked for positive inputs
    integrate_master(rho, params, 0.1, 0.01)


def test_decay_rates_and_fit(params):
    t = np.linspace(0, 10, 201)
    vals = 2.0 * np.exp(-(0.3 + 1j) * t)
    assert fit_decay_rate(t, vals) == pytest.approx(0.3)
    with pytest.raises(InvalidInputError):
        fit_decay_rate([0.0, 1.0], [1.0, 0.5], skip_fraction=0.9)
    assert asymptotic_decay_rate(25, 36, params) == pytest.approx(params.epsilon)
    m = analytic_offdiagonal_decay(36, 25, 2.0, params)
    assert abs(m) == pytest.approx(np.exp(-params.epsilon * 2.0))
    with pytest.raises(InvalidInputError):
        analytic_offdiagonal_decay(-1, 2, 1.0, params)


def test_isolated_coherence_decays_at_level_sum_rate(params):
    # with nothing above to feed it, one coherence decays at eps w0 (j + k)
    dim = 45
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[40, 30] = rho0[30, 40] = 0.5
    rho0[40, 40] = rho0[30, 30] = 0.5
    t = np.linspace(0, 0.5, 11)
    vals = [amplitude_damping_exact(rho0, s, params.epsilon, params.omega0)[40, 30] for s in t]
    rate = fit_decay_rate(t, vals, skip_fraction=0.0)
    assert rate == pytest.approx(params.epsilon * params.omega0 * 70, rel=1e-10)
    traj = integrate_master(rho0, params, 0.5, 0.001, generator="energy-rep", sample_every=50)
    np.testing.assert_allclose(traj.element(40, 30), vals, atol=1e-8)


def test_localization_rate_formulas():
    p = ModelParams.from_epsilon(0.1, omega0=2.0, hbar=0.5)
    assert localization_rates(p, "momentum", 2.0) == pytest.approx(0.1 / (2 * 0.5) * 4.0)
    assert localization_rates(p, "position", 0.5) == pytest.approx(0.1 * 4.0 / 0.5 * 0.25)
    with pytest.raises(InvalidInputError):
        localization_rates(p, "energy", 1.0)


def test_representation_coherence():
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    basis = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    pure = np.outer(psi, psi.conj())
    assert representation_coherence(pure, basis) == pytest.approx(1.0)
    # maximally mixed state with orthogonal basis columns has no coherence
    q, _ = np.linalg.qr(basis)
    assert representation_coherence(np.eye(5) / 5, q) == pytest.approx(0.0, abs=1e-14)
    stack = np.array([pure, np.eye(5) / 5])
    assert representation_coherence(stack, q).shape == (2,)
