import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from decolab.bath import BathSpec, ohmic_bath
from decolab.errors import InvalidInputError
from decolab.fock import LAMBDA, ModelParams
from decolab.grid import ComplexTrajectory, TimeGrid
from decolab.noise import (
    Stream,
    averaged_closed_form,
    deterministic_noise_covariance,
    deterministic_noise_ensemble,
    deterministic_noise_path,
    estimate_covariance,
    estimate_integrated_covariance,
    integrated_covariance,
    make_driver_paths,
    random_noise_covariance,
    random_noise_path,
    rng_stream,
    sample_bath_initials,
)

SMALL_BATH = BathSpec(omegas=[0.6, 1.3, 2.2], couplings=[0.35, 0.25, 0.3])


def test_rng_streams_reproducible_and_distinct():
    a = rng_stream(7, 3, Stream.SYSTEM).standard_normal(5)
    b = rng_stream(7, 3, Stream.SYSTEM).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    others = [rng_stream(7, 4, Stream.SYSTEM), rng_stream(7, 3, Stream.BATH), rng_stream(8, 3, Stream.SYSTEM),
              rng_stream(7, 3, Stream.SYSTEM, 1)]
    for g in others:
        assert not np.allclose(g.standard_normal(5), a)
    with pytest.raises(InvalidInputError):
        rng_stream(1, -1, 0)


def test_driver_paths_shapes_and_scale():
    grid = TimeGrid(0.01, 20000)
    d = make_driver_paths(grid, 3, 1, 0)
    assert d.b_sys.shape == (20000,)
    assert d.b_bath.shape == (3, 20000)
    assert d.n_modes == 3
    # sample variance of N(0, dt) increments
    assert np.var(d.b_sys) / grid.dt == pytest.approx(1.0, abs=0.05)
    # same key, same path; independent of the number of bath modes requested
    np.testing.assert_array_equal(make_driver_paths(grid, 5, 1, 0).b_sys, d.b_sys)


def test_bath_initial_variance(params):
    xs = np.array([sample_bath_initials(SMALL_BATH, params, 2, i).x for i in range(20000)])
    np.testing.assert_allclose(xs.var(axis=0), params.hbar / (2 * SMALL_BATH.omegas), rtol=0.05)


def test_deterministic_noise_path_and_ensemble_agree(params):
    grid = TimeGrid(0.1, 50)
    ens = deterministic_noise_ensemble(SMALL_BATH, params, grid, 5, [0, 7])
    for i, tr in zip([0, 7], ens):
        single = deterministic_noise_path(SMALL_BATH, sample_bath_initials(SMALL_BATH, params, 5, i), params, grid)
        np.testing.assert_allclose(tr.values, single.values, atol=1e-14)


def test_deterministic_noise_path_explicit_sum(params):
    grid = TimeGrid(0.05, 40)
    ini = sample_bath_initials(SMALL_BATH, params, 1, 0)
    got = deterministic_noise_path(SMALL_BATH, ini, params, grid).values
    w, v = SMALL_BATH.omegas, SMALL_BATH.couplings
    ref = [np.sum(v * np.sqrt(w / params.omega0) * ini.x * np.exp(-1j * w * t)) for t in grid.times]
    np.testing.assert_allclose(got, ref, atol=1e-14)


def test_random_noise_path_is_left_point_sum(params):
    grid = TimeGrid(0.02, 60)
    d = make_driver_paths(grid, SMALL_BATH.n_modes, 3, 0)
    got = random_noise_path(SMALL_BATH, d, params).values
    w, v = SMALL_BATH.omegas, SMALL_BATH.couplings
    c = v * np.sqrt(w / params.omega0)
    t = grid.times
    for n in (0, 1, 17, 60):
        ref = 0.0j
        for m in range(n):
            ref += np.sum(c * np.exp(-1j * w * (t[n] - t[m])) * d.b_bath[:, m])
        assert got[n] == pytest.approx(LAMBDA * params.sigma * ref, abs=1e-13)
    per_mode = random_noise_path(SMALL_BATH, d, params, per_mode=True).values
    np.testing.assert_allclose(per_mode.sum(axis=1), got, atol=1e-13)
    mid = random_noise_path(SMALL_BATH, d, params, rule="midpoint").values
    assert np.max(np.abs(mid - got)) < 0.05 * np.max(np.abs(got))


def test_random_noise_path_rejects_mismatch(params):
    grid = TimeGrid(0.1, 5)
    with pytest.raises(InvalidInputError):
        random_noise_path(SMALL_BATH, make_driver_paths(grid, 2, 0, 0), params)
    with pytest.raises(InvalidInputError):
        random_noise_path(SMALL_BATH, make_driver_paths(grid, 3, 0, 0), params, rule="simpson")


def test_closed_forms_basic_properties(params):
    s, t = 0.7, 1.9
    # conjugated covariances are Hermitian in (s, t)
    for cf in (deterministic_noise_covariance, random_noise_covariance):
        c_st = cf(SMALL_BATH, params, s, t)
        c_ts = cf(SMALL_BATH, params, t, s)
        assert c_st == pytest.approx(np.conj(c_ts))
        assert cf(SMALL_BATH, params, s, t, conjugate_first=False) == pytest.approx(
            cf(SMALL_BATH, params, t, s, conjugate_first=False))
    # variance of N_D at any time is (hbar / 2 w0) sum v^2
    assert deterministic_noise_covariance(SMALL_BATH, params, 1.3, 1.3) == pytest.approx(
        params.hbar / (2 * params.omega0) * np.sum(SMALL_BATH.couplings**2))
    # N_R variance grows linearly in time
    r1 = random_noise_covariance(SMALL_BATH, params, 1.0, 1.0)
    r2 = random_noise_covariance(SMALL_BATH, params, 2.0, 2.0)
    assert r2 == pytest.approx(2 * r1)
    assert random_noise_covariance(SMALL_BATH, params, 0.0, 3.0, conjugate_first=False) == 0


def test_white_noise_covariance_estimate():
    grid = TimeGrid(0.1, 400)
    rng = np.random.default_rng(0)
    ens = [ComplexTrajectory(grid, rng.standard_normal(401) + 1j * rng.standard_normal(401)) for _ in range(400)]
    est = estimate_covariance(ens, True, 5)
    assert est.values[0].real == pytest.approx(2.0, abs=4 * est.stderr_re[0])
    for lag in range(1, 6):
        assert abs(est.values[lag].real) <= 4 * est.stderr_re[lag]
    plain = estimate_covariance(ens, False, 2)
    assert abs(plain.values[0]) <= 4 * plain.stderr[0]
    with pytest.raises(InvalidInputError):
        estimate_covariance(ens[:1], True, 2)
    with pytest.raises(InvalidInputError):
        estimate_covariance(ens, True, 1000)


@pytest.mark.parametrize("conj", [True, False])
def test_finite_bath_deterministic_noise_matches_closed_form(params, conj):
    grid = TimeGrid(0.05, 60)
    ens = deterministic_noise_ensemble(SMALL_BATH, params, grid, 11, range(4000))
    est = estimate_covariance(ens, conj, 20, (0.5, 2.0))
    exact = averaged_closed_form(deterministic_noise_covariance, grid, 20, (0.5, 2.0), spec=SMALL_BATH,
                                 params=params, conjugate_first=conj)
    for lag in (0, 10, 20):
        assert abs(est.values[lag].real - exact[lag].real) <= 4 * est.stderr_re[lag] + 1e-12
        assert abs(est.values[lag].imag - exact[lag].imag) <= 4 * est.stderr_im[lag] + 1e-12


@pytest.mark.parametrize("conj", [True, False])
def test_finite_bath_random_noise_matches_closed_form(params, conj):
    grid = TimeGrid(0.01, 150)
    ens = [random_noise_path(SMALL_BATH, make_driver_paths(grid, 3, 4, i), params, rule="midpoint")
           for i in range(3000)]
    est = estimate_covariance(ens, conj, 50, (0.5, 1.0))
    exact = averaged_closed_form(random_noise_covariance, grid, 50, (0.5, 1.0), spec=SMALL_BATH, params=params,
                                 conjugate_first=conj)
    for lag in (0, 25, 50):
        assert abs(est.values[lag].real - exact[lag].real) <= 4 * est.stderr_re[lag] + 1e-12
        assert abs(est.values[lag].imag - exact[lag].imag) <= 4 * est.stderr_im[lag] + 1e-12


def test_integrated_estimator_agrees_with_lagwise(params):
    grid = TimeGrid(0.05, 200)
    ens = deterministic_noise_ensemble(SMALL_BATH, params, grid, 2, range(50))
    lagwise = estimate_covariance(ens, True, 40, (1.0, 8.0), keep_samples=True)
    val, se = integrated_covariance(lagwise, hermitian=True)
    direct = estimate_integrated_covariance(ens, True, 2.0, (1.0, 8.0))
    assert direct.value.real == pytest.approx(val, abs=1e-12)
    assert direct.stderr_re == pytest.approx(se, rel=1e-9)
    with pytest.raises(InvalidInputError):
        estimate_integrated_covariance(ens, True, 0.07)


def test_integrated_covariance_of_array():
    lags = np.arange(11) * 0.1
    val, se = integrated_covariance(np.exp(-lags), 0.1, hermitian=True)
    assert se is None
    assert val == pytest.approx(2 * trapezoid(np.exp(-lags), lags))
    val_plain, _ = integrated_covariance(1j * np.exp(-lags), 0.1, hermitian=False)
    assert val_plain == pytest.approx(2j * trapezoid(np.exp(-lags), lags))


def test_plain_deterministic_noise_small_in_ohmic_limit(params):
    # the plain covariance has no white-noise component: its finite-bath value
    # over the standard window is a small fraction of hbar eps
    spec = ohmic_bath(1024, 0.01, params.a)
    grid = TimeGrid(0.05, 800)
    exact = averaged_closed_form(deterministic_noise_covariance, grid, 40, (1.0, 38.0), spec=spec, params=params,
                                 conjugate_first=False)
    val, _ = integrated_covariance(exact, grid.dt, hermitian=False)
    assert abs(val) < 0.1 * params.hbar * params.epsilon


@settings(max_examples=20, deadline=None)
@given(s=st.floats(0, 5), t=st.floats(0, 5), seed=st.integers(0, 10))
def test_property_closed_form_positive_variance(s, t, seed):
    rng = np.random.default_rng(seed)
    spec = BathSpec(rng.uniform(0.2, 3.0, 4), rng.uniform(0.05, 0.5, 4))
    params = ModelParams()
    # 2x2 covariance matrix of (N(s), N(t)) is positive semidefinite
    for cf in (deterministic_noise_covariance, random_noise_covariance):
        C = np.array([[cf(spec, params, a, b) for b in (s, t)] for a in (s, t)])
        assert np.min(np.linalg.eigvalsh(0.5 * (C + C.conj().T))) >= -1e-12
