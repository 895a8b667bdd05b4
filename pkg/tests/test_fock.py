import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.special import eval_hermite, factorial

from decolab.errors import InvalidDimensionError, InvalidInputError
from decolab.fock import (
    ModelParams,
    build_operators,
    eigenstate_wavefunction,
    hermite_functions,
    momentum_basis,
    position_basis,
    quadrature_operators,
    squeezed_vacuum,
)
from oracles import sinc_dvr_eigenstates


def test_params_defaults_and_derived():
    p = ModelParams()
    assert (p.hbar, p.omega0, p.a, p.mass) == (1.0, 1.0, 0.2, 1.0)
    assert p.epsilon == pytest.approx(0.1)
    assert p.lam**2 == pytest.approx(1j)
    assert p.sigma == 1.0
    q = ModelParams.from_epsilon(0.05, omega0=2.0, hbar=0.5)
    assert q.a == pytest.approx(0.2)
    assert q.epsilon == pytest.approx(0.05)


@pytest.mark.parametrize("kw", [{"hbar": 0}, {"omega0": -1.0}, {"a": -0.1}, {"mass": 2.0}, {"omega0": np.nan}])
def test_params_rejects_invalid(kw):
    with pytest.raises(InvalidInputError):
        ModelParams(**kw)


def test_operators_structure(params):
    ops = build_operators(6, params)
    assert ops.lower[2, 3] == pytest.approx(np.sqrt(3))
    np.testing.assert_allclose(ops.energies, params.hbar * params.omega0 * np.arange(6), atol=1e-14)
    np.testing.assert_allclose(ops.H0, 0.5 * params.hbar**2 * ops.L.conj().T @ ops.L, atol=0)
    comm = ops.lower @ ops.lower.conj().T - ops.lower.conj().T @ ops.lower
    # canonical commutator holds except in the last (truncated) level
    np.testing.assert_allclose(comm[:-1, :-1], np.eye(5), atol=1e-14)
    assert comm[-1, -1] == pytest.approx(-5)
    with pytest.raises(ValueError):
        ops.H0[0, 0] = 1.0


@pytest.mark.parametrize("dim", [0, 1, 2.5])
def test_operators_reject_bad_dim(params, dim):
    with pytest.raises(InvalidDimensionError):
        build_operators(dim, params)


def test_hermite_functions_against_closed_form():
    xi = np.linspace(-4, 4, 41)
    h = hermite_functions(8, xi)
    for n in range(9):
        ref = eval_hermite(n, xi) * np.exp(-xi**2 / 2) / np.sqrt(2.0**n * factorial(n) * np.sqrt(np.pi))
        np.testing.assert_allclose(h[n], ref, atol=1e-12)


@pytest.mark.parametrize("omega", [1.0, 2.5])
def test_eigenfunctions_match_sinc_dvr(omega):
    params = ModelParams(omega0=omega)
    x, E, ref = sinc_dvr_eigenstates(6, omega)
    np.testing.assert_allclose(E, omega * (np.arange(6) + 0.5), atol=1e-8)
    for p in range(6):
        psi = eigenstate_wavefunction(p, x, params)
        sign = np.sign(np.sum(psi.real * ref[p]))
        np.testing.assert_allclose(psi.real, sign * ref[p], atol=1e-8)


def test_eigenfunctions_orthonormal(params):
    x = np.linspace(-10, 10, 2001)
    psis = np.array([eigenstate_wavefunction(p, x, params) for p in range(5)])
    gram = trapezoid(psis[:, None, :].conj() * psis[None, :, :], x)
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)


@pytest.mark.parametrize("bad", [dict(p=-1, X=[0.0, 1.0]), dict(p=0, X=[0.0]), dict(p=1.5, X=[0.0, 1.0]),
                                 dict(p=0, X=[0.0, np.inf])])
def test_eigenfunction_rejects_bad_input(params, bad):
    with pytest.raises(InvalidInputError):
        eigenstate_wavefunction(bad["p"], bad["X"], params)


def test_quadrature_commutator():
    params = ModelParams(hbar=0.7, omega0=1.8)
    X, P = quadrature_operators(12, params)
    comm = X @ P - P @ X
    np.testing.assert_allclose(comm[:-1, :-1], 1j * params.hbar * np.eye(11), atol=1e-13)
    np.testing.assert_allclose(X, X.conj().T, atol=0)
    np.testing.assert_allclose(P, P.conj().T, atol=0)


@pytest.mark.parametrize("r", [0.0, 0.7, -0.9])
def test_squeezed_vacuum_variances(r):
    params = ModelParams(omega0=1.3)
    c = squeezed_vacuum(120, r)
    X, P = quadrature_operators(120, params)
    vx = (c.conj() @ X @ X @ c).real
    vp = (c.conj() @ P @ P @ c).real
    assert vx == pytest.approx(params.hbar / (2 * params.omega0) * np.exp(-2 * r), rel=1e-10)
    assert vp == pytest.approx(params.hbar * params.omega0 / 2 * np.exp(2 * r), rel=1e-10)
    assert np.linalg.norm(c) == pytest.approx(1.0)


def test_representation_bases_are_consistent(params):
    dim = 40
    x = np.linspace(-9, 9, 3001)
    U = position_basis(dim, x, params)
    # same functions as the eigenfunctions, up to the grid renormalization
    np.testing.assert_allclose(U[3], eigenstate_wavefunction(3, x, params).real, atol=1e-8)
    # momentum wavefunctions are Fourier transforms of the position ones
    k = np.array([-1.2, 0.4, 2.0])
    Up = momentum_basis(dim, k, params)
    for n in (0, 1, 2, 5):
        ft = trapezoid(U[n][None, :] * np.exp(-1j * np.outer(k, x) / params.hbar), x, axis=1)
        ft /= np.sqrt(2 * np.pi * params.hbar)
        np.testing.assert_allclose(Up[n], ft, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(dim=st.integers(2, 40), hbar=st.floats(0.2, 3.0), omega0=st.floats(0.1, 5.0))
def test_property_hamiltonian_is_diagonal_and_factorized(dim, hbar, omega0):
    params = ModelParams(hbar=hbar, omega0=omega0)
    ops = build_operators(dim, params)
    off = ops.H0 - np.diag(np.diag(ops.H0))
    assert np.max(np.abs(off)) == 0.0
    np.testing.assert_allclose(ops.energies, hbar * omega0 * np.arange(dim), rtol=1e-13, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(p=st.integers(0, 30), omega0=st.floats(0.3, 3.0))
def test_property_eigenfunction_unit_norm(p, omega0):
    params = ModelParams(omega0=omega0)
    x = np.linspace(-15 / np.sqrt(omega0), 15 / np.sqrt(omega0), 4001)
    psi = eigenstate_wavefunction(p, x, params)
    assert trapezoid(np.abs(psi) ** 2, x) == pytest.approx(1.0, abs=1e-12)
