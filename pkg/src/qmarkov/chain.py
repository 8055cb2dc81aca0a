"""The classical Markov chain equivalent to the two-time statistics.

When ``(rho, L)`` satisfies detailed balance and ``S = -log rho`` has simple
spectrum, the two-time measurement process of ``S`` is a classical
continuous-time Markov chain on ``spec(S)``: initial law
``pi0_s = <rho_0|P_s>``, rate matrix

    Q_{s s'} = <P_s|Phi(P_s')> - delta_{s s'} <P_s|Phi(I)>,

and transition matrix ``P(t) = exp(tQ)``.  The chain is reversible for the
weights ``R = diag(exp(-s))``: ``R Q = Q^T R``, with invariant law
``pi_s = exp(-s)``.  Its moment generating function reproduces the quantum
one: ``E(exp(alpha Delta S)) = pi0 R^alpha exp(tQ) R^{-alpha} 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .detailed_balance import DB_TOL, check_db
from .lindblad import Lindbladian, cp_map
from .operators import (
    HypothesisViolation,
    SpectralDecomposition,
    check_density_matrix,
    require_faithful,
    require_same_dim,
    spectral_decompose,
)
from .two_time import DeltaDistribution, _aggregate_deltas, first_law, joint_law

__all__ = [
    "RATE_ROW_TOL",
    "CTMC",
    "extract_chain",
    "transition_matrix",
    "classical_db_check",
    "time_reversal_residual",
    "classical_mgf",
    "invariant_vector",
    "chain_vs_quantum",
    "chain_delta_distribution",
]

RATE_ROW_TOL = 1e-10


@dataclass(frozen=True)
class CTMC:
    """A continuous-time Markov chain on the spectrum of ``-log rho``.

    ``states`` is strictly increasing, ``pi0`` the initial law and ``rates``
    the generator matrix (nonnegative off-diagonal, rows summing to zero).
    """

    states: np.ndarray
    pi0: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        n = len(self.states)
        if self.pi0.shape != (n,) or self.rates.shape != (n, n):
            raise ValueError("inconsistent chain dimensions")
        if np.any(np.diff(self.states) <= 0):
            raise ValueError("states must be strictly increasing")
        off = self.rates - np.diag(np.diag(self.rates))
        if off.min() < -RATE_ROW_TOL:
            raise ValueError(f"negative off-diagonal rate {off.min():.3e}")
        rows = np.abs(self.rates.sum(axis=1)).max()
        if rows > RATE_ROW_TOL:
            raise ValueError(f"rate matrix rows do not sum to zero (max {rows:.3e})")
        if abs(self.pi0.sum() - 1.0) > 1e-10:
            raise ValueError(f"initial law sums to {self.pi0.sum():.12g}")

    @property
    def size(self) -> int:
        return len(self.states)

    def weight_matrix(self, alpha: float = 1.0) -> np.ndarray:
        """``R^alpha = diag(exp(-alpha s))``."""
        return np.diag(np.exp(-alpha * self.states))


def extract_chain(
    lind: Lindbladian,
    rho,
    rho0,
    db_tol: float = DB_TOL,
    gap_rel: float = 1e-8,
) -> CTMC:
    """Build the equivalent classical chain of ``(rho, L)`` started at ``rho0``.

    Requires faithful ``rho`` with simple spectrum and detailed balance of
    ``(rho, L)``; raises :class:`HypothesisViolation` otherwise.
    """
    rho = require_faithful(check_density_matrix(rho))
    rho0 = check_density_matrix(rho0, name="rho0")
    require_same_dim(rho, rho0, lind.hamiltonian)

    dec = spectral_decompose(rho)
    d = lind.dim
    if len(dec.values) != d:
        raise HypothesisViolation("the stationary state must have simple spectrum")
    gaps = np.diff(dec.values)
    scale = max(float(dec.spread), 1e-30)
    if gaps.min() <= gap_rel * scale:
        raise HypothesisViolation(
            f"near-degenerate spectrum (relative gap {gaps.min() / scale:.3e})"
        )
    report = check_db(rho, lind, s=1.0, tol=db_tol)
    if not report.holds:
        raise HypothesisViolation(
            f"detailed balance fails (residual {report.residual:.3e} > {report.tolerance:.3e})"
        )

    # states ascending in s = -log p, i.e. descending in the eigenvalues of rho
    order = np.argsort(-np.log(dec.values))
    states = -np.log(dec.values[order])
    projectors = [dec.projectors[i] for i in order]
    pi0 = np.array([float(np.real(np.vdot(rho0, P))) for P in projectors])
    unit = cp_map(lind, np.eye(d, dtype=complex))
    rates = np.zeros((d, d))
    for a, Pa in enumerate(projectors):
        for b, Pb in enumerate(projectors):
            rates[a, b] = float(np.real(np.vdot(Pa, cp_map(lind, Pb))))
        rates[a, a] -= float(np.real(np.vdot(Pa, unit)))
    return CTMC(states=states, pi0=pi0, rates=rates)


def transition_matrix(chain: CTMC, t: float) -> np.ndarray:
    """``P(t) = exp(tQ)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return expm(t * chain.rates)


def classical_db_check(chain: CTMC) -> float:
    """Reversibility defect ``max|R Q - Q^T R|`` for ``R = diag(exp(-s))``."""
    R = chain.weight_matrix()
    return float(np.abs(R @ chain.rates - chain.rates.T @ R).max())


def time_reversal_residual(chain: CTMC, t: float) -> float:
    """Semigroup-level reversibility defect ``max|R P(t) R^{-1} - P(t)^T|``."""
    P = transition_matrix(chain, t)
    R = chain.weight_matrix()
    return float(np.abs(R @ P @ np.linalg.inv(R) - P.T).max())


def classical_mgf(chain: CTMC, t: float, alpha: float) -> float:
    """``E(exp(alpha Delta S))`` of the chain: ``pi0 R^a exp(tQ) R^{-a} 1``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    Ra = chain.weight_matrix(alpha)
    Rai = chain.weight_matrix(-alpha)
    ones = np.ones(chain.size)
    return float(chain.pi0 @ Ra @ expm(t * chain.rates) @ Rai @ ones)


def invariant_vector(chain: CTMC, kernel_tol: float = 1e-9) -> np.ndarray:
    """Invariant law of the chain, extracted from ``ker(Q^T)`` by SVD."""
    _, s, Vh = np.linalg.svd(chain.rates.T)
    smax = max(float(s[0]), 1.0)
    vecs = [Vh[i] for i in range(len(s)) if s[i] <= kernel_tol * smax]
    if len(vecs) != 1:
        raise HypothesisViolation(f"invariant law is not unique ({len(vecs)} kernel vectors)")
    pi = np.real(vecs[0])
    if pi.sum() < 0:
        pi = -pi
    if pi.min() < -1e-10:
        raise RuntimeError("invariant vector is not nonnegative")
    return np.clip(pi, 0.0, None) / pi.sum()


def chain_vs_quantum(
    chain: CTMC,
    lind: Lindbladian,
    rho0,
    observable: SpectralDecomposition,
    times,
) -> float:
    """Max deviation between chain law and quantum joint law over ``times``.

    Compares ``pi0_s P_{ss'}(t)`` with ``<exp(tL)(P_s rho_0 P_s)|P_s'>``.
    """
    worst = 0.0
    for t in np.atleast_1d(times):
        law = joint_law(lind, rho0, observable, float(t))
        classical = chain.pi0[:, None] * transition_matrix(chain, float(t))
        worst = max(worst, float(np.abs(classical - law.matrix).max()))
    return worst


def chain_delta_distribution(chain: CTMC, t: float, gap_tol: float | None = None) -> DeltaDistribution:
    """Law of ``Delta S`` computed purely from the classical chain."""
    matrix = chain.pi0[:, None] * transition_matrix(chain, t)
    return _aggregate_deltas(chain.states, matrix, gap_tol)
