"""Lindblad generators and the quantum dynamical semigroups they generate.

A generator is specified by a Hamiltonian ``H`` and a family of jump
operators ``Gamma_l`` and acts on states as

    L(rho) = -i[H, rho] + sum_l ( Gamma_l rho Gamma_l* - (1/2){Gamma_l* Gamma_l, rho} ).

Its dual (Heisenberg picture) acts on observables as

    L^dag(X) = i[H, X] - (1/2){Phi(I), X} + Phi(X),      Phi(X) = sum_l Gamma_l* X Gamma_l.

Superoperators are materialised as ``(d^2, d^2)`` matrices in the
column-major (column-stacking) vectorization convention, and the semigroup
``exp(tL)`` is evaluated with the scaling-and-squaring Pade approximant
(``scipy.linalg.expm``) since generators are non-normal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .operators import (
    PSD_TOL,
    SpectralDecomposition,
    anticommutator,
    as_operator,
    commutator,
    dagger,
    require_hermitian,
    require_same_dim,
)

__all__ = [
    "KERNEL_REL_TOL",
    "RELAXING_TOL",
    "Lindbladian",
    "Reservoir",
    "ReservoirDecomposition",
    "vectorize",
    "unvectorize",
    "apply_generator",
    "apply_dual",
    "cp_map",
    "superoperator",
    "generator_matrix",
    "dual_matrix",
    "deformed_matrix",
    "to_superoperator",
    "propagator",
    "propagate",
    "steady_states",
    "is_relaxing",
    "spectral_gap",
]

#: kernel threshold for singular values, relative to the largest one
KERNEL_REL_TOL = 1e-9
#: eigenvalues of the generator with real part below -RELAXING_TOL count as decaying
RELAXING_TOL = 1e-9


@dataclass
class Lindbladian:
    """A Lindblad generator: Hamiltonian plus jump (Kraus) operators.

    ``kraus`` may be empty, in which case the dynamics is the Hamiltonian
    flow.  All operators must be square and share one dimension; the
    Hamiltonian must be Hermitian.
    """

    hamiltonian: np.ndarray
    kraus: tuple = ()
    label: str = ""

    def __post_init__(self):
        self.hamiltonian = require_hermitian(self.hamiltonian, name="hamiltonian")
        self.kraus = tuple(as_operator(G, f"kraus[{i}]") for i, G in enumerate(self.kraus))
        require_same_dim(self.hamiltonian, *self.kraus)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def kraus_unit(self) -> np.ndarray:
        """``Phi(I) = sum_l Gamma_l* Gamma_l``."""
        K = np.zeros((self.dim, self.dim), dtype=complex)
        for G in self.kraus:
            K += dagger(G) @ G
        return K


@dataclass
class Reservoir:
    """One reservoir coupling: a sub-generator and its stationary state.

    ``steady_state`` is a stationary (usually faithful) state of
    ``lindbladian``; ``beta`` optionally records an inverse temperature when
    the stationary state is a Gibbs state.
    """

    lindbladian: Lindbladian
    steady_state: np.ndarray | None = None
    beta: float | None = None
    label: str = ""


@dataclass
class ReservoirDecomposition:
    """A splitting ``L = sum_j L_j`` of a generator into reservoir parts."""

    reservoirs: tuple
    total: Lindbladian

    def __post_init__(self):
        self.reservoirs = tuple(self.reservoirs)
        dims = {r.lindbladian.dim for r in self.reservoirs} | {self.total.dim}
        if len(dims) != 1:
            raise ValueError(f"reservoir dimensions disagree: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.total.dim

    @classmethod
    def single(cls, lind: Lindbladian, steady_state=None, beta=None) -> "ReservoirDecomposition":
        return cls(
            reservoirs=(Reservoir(lindbladian=lind, steady_state=steady_state, beta=beta),),
            total=lind,
        )


def vectorize(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X, dtype=complex).flatten(order="F")


def unvectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((d, d), order="F")


def apply_generator(lind: Lindbladian, rho) -> np.ndarray:
    """Schrodinger-picture action ``L(rho)``."""
    rho = as_operator(rho, "rho")
    require_same_dim(lind.hamiltonian, rho)
    out = -1j * commutator(lind.hamiltonian, rho)
    if lind.kraus:
        K = lind.kraus_unit()
        out -= 0.5 * anticommutator(K, rho)
        for G in lind.kraus:
            out += G @ rho @ dagger(G)
    return out


def cp_map(lind: Lindbladian, X) -> np.ndarray:
    """The completely positive part ``Phi(X) = sum_l Gamma_l* X Gamma_l``."""
    X = as_operator(X, "X")
    require_same_dim(lind.hamiltonian, X)
    out = np.zeros_like(X)
    for G in lind.kraus:
        out += dagger(G) @ X @ G
    return out


def apply_dual(lind: Lindbladian, X) -> np.ndarray:
    """Heisenberg-picture action ``L^dag(X)``."""
    X = as_operator(X, "X")
    require_same_dim(lind.hamiltonian, X)
    out = 1j * commutator(lind.hamiltonian, X)
    if lind.kraus:
        out -= 0.5 * anticommutator(lind.kraus_unit(), X)
        out += cp_map(lind, X)
    return out


def superoperator(apply_fn: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Matrix of a linear map on operators in the column-stacking basis."""
    M = np.zeros((dim * dim, dim * dim), dtype=complex)
    E = np.zeros((dim, dim), dtype=complex)
    for k in range(dim * dim):
        E[k % dim, k // dim] = 1.0
        M[:, k] = vectorize(apply_fn(E))
        E[k % dim, k // dim] = 0.0
    return M


def generator_matrix(lind: Lindbladian) -> np.ndarray:
    return superoperator(lambda X: apply_generator(lind, X), lind.dim)


def dual_matrix(lind: Lindbladian) -> np.ndarray:
    return superoperator(lambda X: apply_dual(lind, X), lind.dim)


def deformed_matrix(lind: Lindbladian, observable: SpectralDecomposition, alpha: float) -> np.ndarray:
    """Matrix of the tilted generator ``L_alpha(X) = L(X e^{-alpha S}) e^{alpha S}``.

    ``observable`` is the spectral decomposition of the Hermitian ``S``.
    At ``alpha = 0`` this is the plain generator.
    """
    e_minus = observable.apply(lambda s: np.exp(-alpha * s))
    e_plus = observable.apply(lambda s: np.exp(alpha * s))
    return superoperator(lambda X: apply_generator(lind, X @ e_minus) @ e_plus, lind.dim)


def to_superoperator(
    kind: str,
    lind: Lindbladian,
    observable: SpectralDecomposition | None = None,
    alpha: float = 0.0,
) -> np.ndarray:
    """Materialise one of the canonical maps as a ``(d^2, d^2)`` matrix.

    ``kind`` is one of ``"generator"``, ``"dual"``, ``"deformed"``; the
    deformed variant needs the entropic observable ``S`` and the tilt
    ``alpha``.
    """
    if kind == "generator":
        return generator_matrix(lind)
    if kind == "dual":
        return dual_matrix(lind)
    if kind == "deformed":
        if observable is None:
            raise ValueError("deformed superoperator requires the observable S")
        return deformed_matrix(lind, observable, alpha)
    raise ValueError(f"unknown superoperator kind {kind!r}")


def propagator(lind: Lindbladian, t: float) -> np.ndarray:
    """``exp(t L)`` as a superoperator matrix."""
    if t < 0:
        raise ValueError(f"propagation time must be nonnegative, got {t}")
    return expm(t * generator_matrix(lind))


def propagate(lind: Lindbladian, rho0, t: float) -> np.ndarray:
    """Evolve a state: ``rho_t = exp(tL)(rho_0)``.

    The result is re-hermitized (against roundoff); trace and positivity are
    preserved by the dynamics itself.
    """
    rho0 = as_operator(rho0, "rho0")
    require_same_dim(lind.hamiltonian, rho0)
    rho_t = unvectorize(propagator(lind, t) @ vectorize(rho0))
    return (rho_t + dagger(rho_t)) / 2.0


def _kernel_vectors(M: np.ndarray, kernel_tol: float | None) -> list:
    _, s, Vh = np.linalg.svd(M)
    smax = float(s[0]) if s.size else 0.0
    tol = kernel_tol if kernel_tol is not None else KERNEL_REL_TOL * max(smax, 1.0)
    vecs = [np.conj(Vh[i]) for i in range(len(s)) if s[i] <= tol]
    if not vecs:  # the kernel of a Lindbladian is never empty; keep the best vector
        vecs = [np.conj(Vh[-1])]
    return vecs


def steady_states(lind: Lindbladian, kernel_tol: float | None = None) -> list:
    """Stationary states: a maximal independent family in ``ker L``.

    The kernel of the superoperator is extracted by SVD (singular values at
    or below ``kernel_tol``, default ``1e-9 * s_max``), its vectors are
    hermitized and searched — singly and pairwise — for trace-one positive
    semidefinite representatives.  Kernel directions admitting no such
    representative are skipped with a warning.
    """
    M = generator_matrix(lind)
    kvecs = _kernel_vectors(M, kernel_tol)
    herm: list[np.ndarray] = []
    for v in kvecs:
        X = unvectorize(v)
        for C in ((X + dagger(X)) / 2.0, (X - dagger(X)) / 2.0j):
            if np.abs(C).max() > 1e-12:
                herm.append(C)

    candidates: list[np.ndarray] = []
    candidates.extend(herm)
    for i in range(len(herm)):
        for j in range(i + 1, len(herm)):
            candidates.append(herm[i] + herm[j])
            candidates.append(herm[i] - herm[j])

    found: list[np.ndarray] = []
    basis: list[np.ndarray] = []  # vectorized accepted states, for rank tests
    for C in candidates:
        tr = float(np.trace(C).real)
        if abs(tr) < 1e-12 * max(1.0, float(np.abs(C).max())) * lind.dim:
            continue
        Y = C / tr
        w = np.linalg.eigvalsh(Y)
        if w[0] < -10 * PSD_TOL:
            continue
        vy = vectorize(Y)
        if basis:
            stacked = np.vstack(basis + [vy])
            if np.linalg.matrix_rank(stacked, tol=1e-8) == len(basis):
                continue  # already in the span of accepted states
        found.append((Y + dagger(Y)) / 2.0)
        basis.append(vy)

    if len(found) < len(kvecs):
        warnings.warn(
            "some kernel directions admit no PSD trace-one representative "
            f"({len(found)} states from a {len(kvecs)}-dimensional kernel)",
            stacklevel=2,
        )
    if not found:
        # fall back on a long-time average of the maximally mixed state
        rho = np.eye(lind.dim, dtype=complex) / lind.dim
        acc = np.zeros_like(rho)
        for t in (50.0, 100.0, 200.0):
            acc += propagate(lind, rho, t)
        Y = acc / np.trace(acc).real
        found = [(Y + dagger(Y)) / 2.0]

    # deterministic ordering: lexicographic in the rounded real diagonal
    found.sort(key=lambda Y: tuple(np.round(np.diag(Y).real, 12)))
    return found


def is_relaxing(lind: Lindbladian, tol: float = RELAXING_TOL) -> bool:
    """True iff ``exp(tL)`` drives every state to a unique stationary one.

    Checked spectrally: the superoperator must have a one-dimensional kernel
    (up to ``tol``) and every other eigenvalue must have real part below
    ``-tol``.
    """
    M = generator_matrix(lind)
    s = np.linalg.svd(M, compute_uv=False)
    smax = max(float(s[0]), 1.0) if s.size else 1.0
    if int(np.sum(s <= tol * smax)) != 1:
        return False
    eigs = np.linalg.eigvals(M)
    keep = np.delete(eigs, int(np.argmin(np.abs(eigs))))
    return bool(np.all(keep.real < -tol))


def spectral_gap(lind: Lindbladian) -> float:
    """Distance from the imaginary axis of the non-kernel spectrum."""
    eigs = np.linalg.eigvals(generator_matrix(lind))
    keep = np.delete(eigs, int(np.argmin(np.abs(eigs))))
    if keep.size == 0:
        return np.inf
    return float(-np.max(keep.real))
