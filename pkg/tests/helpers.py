"""Shared model builders for the test suite."""

import numpy as np

from qmarkov import Lindbladian, QrmSpec
from qmarkov.operators import dagger


def haar_unitary(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_lindblad(rng, dim, n_kraus=2, scale=1.0):
    """A generic Lindblad generator with dense Gaussian jump operators."""
    H = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = (H + dagger(H)) / 2.0
    kraus = tuple(
        scale / np.sqrt(dim) * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        for _ in range(n_kraus)
    )
    return Lindbladian(hamiltonian=H, kraus=kraus)


def random_db_model(rng, dim):
    """A generator in detailed balance with a random faithful state.

    The state's eigenbasis carries jump operators between eigenvector pairs
    whose rates satisfy the classical balance ``g(j->i) p_j = g(i->j) p_i``;
    the Hamiltonian is diagonal in the same basis.
    """
    Q = haar_unitary(rng, dim)
    p = rng.uniform(0.2, 1.0, size=dim)
    p /= p.sum()
    rho = (Q * p) @ dagger(Q)
    H = (Q * rng.uniform(-1.0, 1.0, size=dim)) @ dagger(Q)
    kraus = []
    for i in range(dim):
        for j in range(i + 1, dim):
            g = rng.uniform(0.2, 1.0)
            vi, vj = Q[:, i], Q[:, j]
            kraus.append(np.sqrt(g) * np.outer(vi, vj.conj()))
            kraus.append(np.sqrt(g * p[j] / p[i]) * np.outer(vj, vi.conj()))
    rho = (rho + dagger(rho)) / 2.0
    return Lindbladian(hamiltonian=H, kraus=tuple(kraus)), rho


def random_qrm(rng, dim, commuting=True, gamma=None):
    """A random reset specification; commuting targets share H's eigenbasis."""
    if gamma is None:
        gamma = float(rng.uniform(0.5, 2.0))
    if commuting:
        Q = haar_unitary(rng, dim)
        p = rng.uniform(0.2, 1.0, size=dim)
        p /= p.sum()
        T = (Q * p) @ dagger(Q)
        H = (Q * rng.uniform(-1.0, 1.0, size=dim)) @ dagger(Q)
    else:
        p = rng.uniform(0.2, 1.0, size=dim)
        p /= p.sum()
        QT = haar_unitary(rng, dim)
        T = (QT * p) @ dagger(QT)
        QH = haar_unitary(rng, dim)
        H = (QH * rng.uniform(-1.0, 1.0, size=dim)) @ dagger(QH)
    T = (T + dagger(T)) / 2.0
    H = (H + dagger(H)) / 2.0
    return QrmSpec(hamiltonian=H, reset_state=T, gamma=gamma)


def greedy_spectrum_residual(computed, expected_with_mult):
    """Max distance in a greedy matching of a computed spectrum to a closed one."""
    pool = list(computed)
    worst = 0.0
    for value, mult in expected_with_mult:
        for _ in range(mult):
            k = int(np.argmin(np.abs(np.asarray(pool) - value)))
            worst = max(worst, float(abs(pool.pop(k) - value)))
    assert not pool
    return worst
