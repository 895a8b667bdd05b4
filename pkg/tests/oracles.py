"""Independent reference solutions used by the tests.

None of these call into the library; they are written from the model
definitions with different numerical methods (dense matrix exponentials,
Kraus sums, sinc discrete variable representations, Gaussian moment sums).
"""

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln


def sinc_dvr_eigenstates(n_states, omega, hbar=1.0, half_width=12.0, h=0.05):
    """Lowest eigenfunctions of ``p^2/2 + omega^2 x^2/2`` by sinc DVR.

    Returns the grid and an array ``(n_states, n_points)`` of real
    eigenfunctions normalized in the continuum sense and with a positive
    slope or value at the first non-negligible point to the right of 0.
    """
    x = np.arange(-half_width, half_width + h / 2, h)
    n = x.size
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        T = np.where(d == 0, np.pi**2 / 3, 2.0 * (-1.0) ** d / d**2)
    T = hbar**2 / (2 * h**2) * T
    H = T + np.diag(0.5 * omega**2 * x**2)
    E, V = np.linalg.eigh(H)
    psi = V[:, :n_states].T / np.sqrt(h)
    return x, E[:n_states], psi


def amplitude_damping_exact(rho0, t, eps, omega0):
    """Exact Kraus-sum solution of the damped-oscillator master equation.

    ``rho_jk(t) = e^{-i w0 (j-k) t} eta^{(j+k)/2}
    sum_l sqrt(C(j+l, l) C(k+l, l)) (1 - eta)^l rho_{j+l, k+l}(0)``
    with ``eta = exp(-2 eps w0 t)``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    eta = np.exp(-2 * eps * omega0 * t)
    out = np.zeros_like(rho0)
    for j in range(d):
        for k in range(d):
            total = 0.0j
            for l in range(d - max(j, k)):
                logc = 0.5 * (gammaln(j + l + 1) - gammaln(l + 1) - gammaln(j + 1)
                              + gammaln(k + l + 1) - gammaln(l + 1) - gammaln(k + 1))
                w = np.exp(logc) * (1 - eta) ** l
                total += w * rho0[j + l, k + l]
            out[j, k] = np.exp(-1j * omega0 * (j - k) * t) * eta ** ((j + k) / 2) * total
    return out


def lindblad_superoperator(dim, hbar, omega0, eps):
    """Dense generator acting on row-major ``vec(rho)`` built with Kronecker products."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    L = np.sqrt(2 * omega0 / hbar) * a
    H = hbar * omega0 * (a.conj().T @ a)
    eye = np.eye(dim)
    # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
    left = lambda A: np.kron(A, eye)  # noqa: E731
    right = lambda B: np.kron(eye, B.T)  # noqa: E731
    gen = -1j / hbar * (left(H) - right(H)) - eps / hbar * (left(H) + right(H))
    gen += hbar * eps * np.kron(L, L.conj())
    return gen


def lindblad_exact(rho0, t, hbar, omega0, eps):
    d = rho0.shape[0]
    gen = lindblad_superoperator(d, hbar, omega0, eps)
    return (expm(gen * t) @ np.asarray(rho0, complex).reshape(-1)).reshape(d, d)


def coupled_drift_reference(omegas, couplings, omega0):
    """Drift of ``(Q, q_1..q_n)`` for the oscillator linearly coupled to a finite bath."""
    w = np.asarray(omegas, float)
    v = np.asarray(couplings, float)
    n = w.size
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, 0] = -1j * omega0
    M[0, 1:] = -v * np.sqrt(w / omega0)
    M[1:, 0] = v * np.sqrt(omega0 / w)
    M[np.arange(1, n + 1), np.arange(1, n + 1)] = -1j * w
    return M


def polynomial_expectation(coeffs, y, var):
    """``E[f(y + N)]`` for a polynomial ``f`` and centered Gaussian-type ``N``.

    ``N`` is any complex linear combination of real Gaussians with
    ``E[N^2] = var``; then ``E[N^(2k)] = (2k-1)!! var^k`` and odd moments vanish.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    total = 0.0j
    for m, c in enumerate(coeffs):
        if c == 0:
            continue
        for k in range(m // 2 + 1):
            binom = np.exp(gammaln(m + 1) - gammaln(2 * k + 1) - gammaln(m - 2 * k + 1))
            dfact = np.prod(np.arange(2 * k - 1, 0, -2)) if k else 1.0
            total += c * binom * y ** (m - 2 * k) * dfact * var**k
    return total


def free_noise_variance(omega, t, hbar=1.0):
    """``E[N_t^2]`` for ``N_t = lam sigma int_0^t exp(-i w (t-u)) db(u)``, ``lam^2 = i``."""
    return hbar * (1 - np.exp(-2j * omega * t)) / (2 * omega)
