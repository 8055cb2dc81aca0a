"""Quantum detailed balance tests and the KMS counterexample fixture.

A pair ``(rho, L)`` of a faithful stationary state and a Lindbladian
satisfies detailed balance (in the weighted sense with parameter ``s``) when
the completely positive part ``Phi`` of the dual generator is self-adjoint
for the inner product ``<A|B>_s = tr(rho^s A* rho^{1-s} B)``.  The ``s = 1``
(GNS) variant is the operative one: it forces ``[H, rho] = 0``,
``[Phi(I), rho] = 0`` and the commutation of the generator with the
dephasing (pinching) map of ``rho``.  The ``s = 1/2`` (KMS) variant is
strictly weaker, as the bundled qubit fixture demonstrates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lindblad import Lindbladian, apply_generator
from .operators import (
    as_operator,
    check_density_matrix,
    commutator,
    dagger,
    pinch,
    require_faithful,
    require_hermitian,
    require_same_dim,
    spectral_decompose,
    state_power,
    trace_norm,
)

__all__ = [
    "DB_TOL",
    "STATIONARITY_WARN_TOL",
    "PAULI",
    "DbReport",
    "FagnolaFixture",
    "check_db",
    "dissipator_selfadjoint_residual",
    "pinch_commutation_defect",
    "check_pinch_commutation",
    "commutation_identities",
    "kms_state",
    "fagnola_fixture",
]

DB_TOL = 1e-9
STATIONARITY_WARN_TOL = 1e-8

_s0 = np.eye(2, dtype=complex)
_s1 = np.array([[0, 1], [1, 0]], dtype=complex)
_s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_s3 = np.array([[1, 0], [0, -1]], dtype=complex)
#: identity and the three Pauli matrices
PAULI = (_s0, _s1, _s2, _s3)


@dataclass(frozen=True)
class DbReport:
    """Outcome of a detailed-balance test.

    ``holds`` iff ``residual <= tolerance``; ``variant`` names the inner
    product used (``rho`` for s=1, ``kms`` for s=1/2, ``rho_s(s)`` else);
    ``stationarity_defect`` is the trace norm of ``L(rho)``.
    """

    holds: bool
    residual: float
    variant: str
    tolerance: float
    stationarity_defect: float


def _phi_tensor(lind: Lindbladian) -> np.ndarray:
    """``Phi(E_cd)`` for all matrix units, as a (d,d,d,d) tensor [c,d,x,y]."""
    d = lind.dim
    if not lind.kraus:
        return np.zeros((d, d, d, d), dtype=complex)
    K = np.stack(lind.kraus)
    # (Gamma* E_cd Gamma)[x,y] = conj(Gamma[c,x]) Gamma[d,y]
    return np.einsum("lcx,ldy->cdxy", K.conj(), K)


def _weighted_adjoint_residual(rho: np.ndarray, tensor: np.ndarray, s: float) -> float:
    """Max-abs defect of self-adjointness of a map given by its unit tensor.

    ``tensor[a,b] = M(E_ab)``.  Compares ``<E_ab|M(E_cd)>_s`` with
    ``<M(E_ab)|E_cd>_s`` over all pairs of matrix units.
    """
    rs = state_power(rho, s)
    r1s = state_power(rho, 1.0 - s)
    # <E_ab|X>_s = (rho^{1-s} X rho^s)[a,b]
    G1 = np.einsum("ax,cdxy,yb->abcd", r1s, tensor, rs)
    # <M(E_ab)|E_cd>_s = (rho^s M(E_ab)* rho^{1-s})[d,c]
    tensor_dag = tensor.conj().transpose(0, 1, 3, 2)
    G2 = np.einsum("dx,abxy,yc->abcd", rs, tensor_dag, r1s)
    return float(np.abs(G1 - G2).max())


def check_db(rho, lind: Lindbladian, s: float = 1.0, tol: float = DB_TOL) -> DbReport:
    """Test detailed balance of ``(rho, L)`` in the ``s``-weighted sense.

    ``rho`` must be a faithful density matrix; it is expected to be
    stationary for ``L`` (a warning is emitted otherwise, since the test is
    then of little physical meaning).  The residual is the maximal defect of
    self-adjointness of the CP part over a basis of matrix units, and the
    verdict compares it against ``tol`` scaled by the norm of the CP part.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    rho = check_density_matrix(rho)
    rho = require_faithful(rho)
    require_same_dim(rho, lind.hamiltonian)

    stationarity = trace_norm(apply_generator(lind, rho))
    if stationarity > STATIONARITY_WARN_TOL:
        warnings.warn(
            f"state is not stationary for the generator (|L(rho)|_1 = {stationarity:.3e})",
            stacklevel=2,
        )

    tensor = _phi_tensor(lind)
    d = lind.dim
    phi_scale = float(np.linalg.norm(tensor.reshape(d * d, d * d), 2))
    residual = _weighted_adjoint_residual(rho, tensor, s)
    tolerance = tol * max(phi_scale, 1.0)

    if s == 1.0:
        variant = "rho"
    elif s == 0.5:
        variant = "kms"
    else:
        variant = f"rho_s({s:g})"
    return DbReport(
        holds=bool(residual <= tolerance),
        residual=residual,
        variant=variant,
        tolerance=tolerance,
        stationarity_defect=stationarity,
    )


def dissipator_selfadjoint_residual(rho, lind: Lindbladian, s: float = 1.0) -> float:
    """Self-adjointness defect of the dual dissipator ``Phi(X) - (1/2){Phi(I), X}``.

    Under detailed balance this map is ``rho``-self-adjoint because the CP
    part is and the anticommutator with ``Phi(I)`` (which then commutes with
    ``rho``) is as well.
    """
    rho = require_faithful(check_density_matrix(rho))
    require_same_dim(rho, lind.hamiltonian)
    d = lind.dim
    tensor = _phi_tensor(lind)
    K = lind.kraus_unit()
    E = np.eye(d, dtype=complex)
    for c in range(d):
        for dd in range(d):
            unit = np.outer(E[:, c], E[dd, :])
            tensor[c, dd] -= 0.5 * (K @ unit + unit @ K)
    return _weighted_adjoint_residual(rho, tensor, s)


def pinch_commutation_defect(rho, lind: Lindbladian, X) -> np.ndarray:
    """The operator ``L(Diag_rho(X)) - Diag_rho(L(X))``.

    ``Diag_rho`` is the pinching in the eigenbasis of ``rho``.  Under
    ``s = 1`` detailed balance this vanishes for every ``X``.
    """
    rho = require_faithful(check_density_matrix(rho))
    X = as_operator(X, "X")
    require_same_dim(rho, lind.hamiltonian, X)
    dec = spectral_decompose(rho)
    return apply_generator(lind, pinch(dec, X)) - pinch(dec, apply_generator(lind, X))


def check_pinch_commutation(rho, lind: Lindbladian) -> float:
    """Max trace-norm of the pinch-commutation defect over a basis of units."""
    rho = require_faithful(check_density_matrix(rho))
    require_same_dim(rho, lind.hamiltonian)
    dec = spectral_decompose(rho)
    d = lind.dim
    worst = 0.0
    E = np.zeros((d, d), dtype=complex)
    for k in range(d * d):
        E[k % d, k // d] = 1.0
        defect = apply_generator(lind, pinch(dec, E)) - pinch(dec, apply_generator(lind, E))
        worst = max(worst, trace_norm(defect))
        E[k % d, k // d] = 0.0
    return worst


def commutation_identities(rho, lind: Lindbladian) -> tuple:
    """Trace norms of ``[Phi(I), rho]`` and ``[H, rho]``.

    Both commutators vanish under ``s = 1`` detailed balance.
    """
    rho = require_faithful(check_density_matrix(rho))
    require_same_dim(rho, lind.hamiltonian)
    return (
        trace_norm(commutator(lind.kraus_unit(), rho)),
        trace_norm(commutator(lind.hamiltonian, rho)),
    )


def kms_state(H, beta: float) -> tuple:
    """Gibbs state ``exp(-beta H)/Z`` and its free energy ``-log(Z)/beta``."""
    if beta <= 0:
        raise ValueError(f"inverse temperature must be positive, got {beta}")
    H = require_hermitian(H, name="hamiltonian")
    w, V = np.linalg.eigh(H)
    # subtract the ground energy before exponentiating to avoid overflow
    shifted = np.exp(-beta * (w - w[0]))
    Z = float(shifted.sum())
    rho = (V * (shifted / Z)) @ dagger(V)
    free_energy = float(w[0] - np.log(Z) / beta)
    return (rho + dagger(rho)) / 2.0, free_energy


@dataclass(frozen=True)
class FagnolaFixture:
    """Qubit model satisfying KMS (s=1/2) but not GNS (s=1) detailed balance.

    With ``H = kappa*omega*sigma_1`` and the single jump operator
    ``Gamma = sqrt(1-kappa^2) I + i r sigma_1 + s sigma_2 + sigma_3`` where
    ``s = omega (1+kappa)/(1-kappa)`` and ``r = omega sqrt((1+kappa)/(1-kappa))``,
    the state ``rho = diag(nu, 1-nu)``, ``nu = (1 - sqrt(1-kappa^2))/2``, is
    stationary and the modular identity ``rho^{1/2} Gamma* rho^{-1/2} = Gamma``
    holds, so the CP part is KMS-self-adjoint.  GNS detailed balance fails:
    ``[H, rho] != 0`` and the pinch-commutation defect is nonzero.

    ``probe`` is the observable on which the defect is the multiple
    ``-4*omega*kappa/(1-kappa)`` of ``sigma_3``.  (With this Hamiltonian the
    commutator ``[H, rho]`` is proportional to ``sigma_2``, so the defect
    lives on ``sigma_2``; on ``sigma_1`` it vanishes identically.)
    """

    kappa: float
    omega: float
    r: float
    s: float
    nu: float
    model: Lindbladian
    rho: np.ndarray
    probe: np.ndarray

    @property
    def defect_coefficient(self) -> float:
        """Coefficient of ``sigma_3`` in the pinch defect on ``probe``."""
        return -4.0 * self.omega * self.kappa / (1.0 - self.kappa)

    def predicted_defect(self) -> np.ndarray:
        return self.defect_coefficient * _s3


def fagnola_fixture(kappa: float, omega: float) -> FagnolaFixture:
    """Construct the KMS-but-not-GNS detailed balance qubit fixture."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    s = omega * (1.0 + kappa) / (1.0 - kappa)
    r = omega * np.sqrt((1.0 + kappa) / (1.0 - kappa))
    nu = (1.0 - np.sqrt(1.0 - kappa**2)) / 2.0
    H = kappa * omega * _s1
    Gamma = np.sqrt(1.0 - kappa**2) * _s0 + 1j * r * _s1 + s * _s2 + _s3
    rho = 0.5 * (_s0 - np.sqrt(1.0 - kappa**2) * _s3)
    model = Lindbladian(hamiltonian=H, kraus=(Gamma,), label="kms-counterexample")
    return FagnolaFixture(
        kappa=kappa, omega=omega, r=r, s=s, nu=nu, model=model, rho=rho, probe=_s2.copy()
    )
